// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/models/generator.hpp"

namespace noisesim::models {

Generator::Generator(const GeneratorSpec& spec, int embed_dim, uint64_t init_seed)
    : spec_(spec), embed_dim_(embed_dim) {
  NS_CHECK(spec.base_channels >= 1 && spec.res_blocks >= 2, ConfigError,
           "Generator: need base_channels >= 1 and res_blocks >= 2");
  NS_CHECK(embed_dim >= 1, ConfigError, "Generator: embed_dim must be positive");
  Rng rng = rng_stream(init_seed, "generator_init");
  const int c = spec.base_channels, c2 = 2 * spec.base_channels;

  down1_ = Conv2dLayer::create(1, c, 3, 2, 0, rng);
  down2_ = Conv2dLayer::create(c, c2, 3, 2, 0, rng);
  blocks_.resize(spec.res_blocks);
  for (auto& blk : blocks_) {
    blk.conv1 = Conv2dLayer::create(c2, c2, 3, 1, 0, rng);
    blk.conv2 = Conv2dLayer::create(c2, c2, 3, 1, 0, rng);
  }
  up1_ = ConvTranspose2dLayer::create(c2, c, 3, 2, 1, rng);
  // zero-initialized head: an untrained generator contributes nothing on
  // top of the global residual connection
  up2_ = ConvTranspose2dLayer::create(c, 1, 3, 2, 1, rng, 0.0);

  for (int s = 0; s < spec.film_sites(); ++s) {
    film_w_.push_back(LinearLayer::constant(embed_dim, c2, 1.0));
    film_b_.push_back(LinearLayer::constant(embed_dim, c2, 0.0));
  }
}

std::pair<Tensor, Tensor> Generator::film_params(const Tensor& n, int site) const {
  NS_CHECK(site >= 0 && site < spec_.film_sites(), InvalidInput,
           "film_params: site " << site << " out of range [0," << spec_.film_sites() << ")");
  NS_CHECK(n.rank() == 1 && n.dim(0) == embed_dim_, ShapeError,
           "film_params: embedding dim " << shape_str(n.shape()) << ", expected [" << embed_dim_
                                         << "]");
  return {film_w_[site].forward(n), film_b_[site].forward(n)};
}

std::vector<int> Generator::tap_channels() const {
  const int c = spec_.base_channels, c2 = 2 * spec_.base_channels;
  return {1, c, c2, c2, c2};
}

Tensor Generator::run_block(const ResBlock& blk, const Tensor& x, bool training,
                            Rng* dropout_rng) const {
  Tensor h = relu(instance_norm(blk.conv1.forward(reflect_pad2d(x, 1))));
  if (training && spec_.dropout > 0.0) {
    NS_CHECK(dropout_rng != nullptr, ConfigError, "Generator: training pass needs a dropout rng");
    h = dropout(h, spec_.dropout, *dropout_rng, true);
  }
  h = instance_norm(blk.conv2.forward(reflect_pad2d(h, 1)));
  return add(x, h);
}

Tensor Generator::encode_impl(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
                              GeneratorTaps* taps, int stop_after_block, int* h1, int* w1,
                              int* h0, int* w0) const {
  NS_CHECK(x.rank() == 3 && x.dim(0) == 1, ShapeError,
           "Generator: input must be [1,H,W], got " << shape_str(x.shape()));
  const bool conditioned = n.defined();
  if (conditioned)
    NS_CHECK(n.dim(0) == embed_dim_, ShapeError,
             "Generator: embedding dim " << n.dim(0) << ", bundle expects " << embed_dim_);
  if (h0) *h0 = x.dim(1);
  if (w0) *w0 = x.dim(2);
  if (taps) taps->layers.assign(1, x);

  Tensor h = relu(instance_norm(down1_.forward(reflect_pad2d(x, 1))));
  if (h1) *h1 = h.dim(1);
  if (w1) *w1 = h.dim(2);
  if (taps) taps->layers.push_back(h);

  h = relu(instance_norm(down2_.forward(reflect_pad2d(h, 1))));
  if (taps) taps->layers.push_back(h);
  if (conditioned) {
    auto [fw, fb] = film_params(n, 0);
    h = film(h, fw, fb);
  }

  const int mid_idx = std::max(0, spec_.res_blocks / 2 - 1);
  const int late_idx = std::max(mid_idx, spec_.res_blocks - 2);
  for (int i = 0; i <= stop_after_block; ++i) {
    h = run_block(blocks_[i], h, training, dropout_rng);
    if (taps && (i == mid_idx || i == late_idx)) taps->layers.push_back(h);
    if (conditioned) {
      auto [fw, fb] = film_params(n, i + 1);
      h = film(h, fw, fb);
    }
  }
  return h;
}

Tensor Generator::forward(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
                          GeneratorTaps* taps) const {
  int h0 = 0, w0 = 0, h1 = 0, w1 = 0;
  Tensor h = encode_impl(x, n, training, dropout_rng, taps, spec_.res_blocks - 1, &h1, &w1, &h0,
                         &w0);
  h = relu(instance_norm(up1_.forward(h, h1, w1)));
  Tensor delta = up2_.forward(h, h0, w0);
  return add(x, delta);
}

void Generator::encode(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
                       GeneratorTaps* taps) const {
  const int late_idx = std::max(std::max(0, spec_.res_blocks / 2 - 1), spec_.res_blocks - 2);
  encode_impl(x, n, training, dropout_rng, taps, late_idx, nullptr, nullptr, nullptr, nullptr);
}

void Generator::collect(ParamMap& pm, const std::string& prefix) const {
  down1_.collect(pm, prefix + "down1");
  down2_.collect(pm, prefix + "down2");
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].conv1.collect(pm, prefix + "block" + std::to_string(i) + ".conv1");
    blocks_[i].conv2.collect(pm, prefix + "block" + std::to_string(i) + ".conv2");
  }
  up1_.collect(pm, prefix + "up1");
  up2_.collect(pm, prefix + "up2");
  for (size_t s = 0; s < film_w_.size(); ++s) {
    film_w_[s].collect(pm, prefix + "film" + std::to_string(s) + ".w");
    film_b_[s].collect(pm, prefix + "film" + std::to_string(s) + ".b");
  }
}

}  // namespace noisesim::models
