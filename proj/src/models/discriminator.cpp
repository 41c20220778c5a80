// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/models/discriminator.hpp"

namespace noisesim::models {

namespace {
constexpr int kStrides[5] = {2, 2, 2, 1, 1};
}

Discriminator::Discriminator(const DiscriminatorSpec& spec, uint64_t init_seed) : spec_(spec) {
  Rng rng = rng_stream(init_seed, "discriminator_init");
  const int c = spec.base_channels;
  const int channels[6] = {1, c, 2 * c, 4 * c, 8 * c, 1};
  for (int i = 0; i < 5; ++i)
    layers_.push_back(Conv2dLayer::create(channels[i], channels[i + 1], 4, kStrides[i], 1, rng));
}

int Discriminator::score_map_dim(int n) {
  for (int s : kStrides) n = (n + 2 * 1 - 4) / s + 1;
  return n;
}

Tensor Discriminator::forward(const Tensor& x) const {
  NS_CHECK(x.rank() == 3 && x.dim(0) == 1, ShapeError,
           "Discriminator: input must be [1,H,W], got " << shape_str(x.shape()));
  Tensor h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = leaky_relu(h, 0.2);
  }
  Tensor score = sigmoid(h);
  return reshape(score, {score.dim(1), score.dim(2)});
}

void Discriminator::collect(ParamMap& pm, const std::string& prefix) const {
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i].collect(pm, prefix + "layer" + std::to_string(i));
}

}  // namespace noisesim::models
