// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_MODELS_GENERATOR_HPP_
#define NOISESIM_MODELS_GENERATOR_HPP_

#include <vector>

#include "noisesim/models/modules.hpp"

namespace noisesim::models {

struct GeneratorSpec {
  int base_channels = 64;
  int res_blocks = 9;
  double dropout = 0.5;

  int film_sites() const { return res_blocks + 1; }  // encoder output + each block
};

// Feature taps used by the patch-wise contrastive loss: the input identity,
// both downsampling convolutions, and two interior residual blocks.
struct GeneratorTaps {
  std::vector<Tensor> layers;  // input, down1, down2, res_mid, res_late
};

// Spectrogram-to-spectrogram translator. Two stride-2 downsampling
// convolutions, res_blocks residual blocks, two stride-2 transposed
// convolutions, and a global residual connection; a noise embedding
// conditions the encoder output and every residual block output through
// per-site FiLM maps. The final layer starts at zero so an untrained
// generator is the identity.
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorSpec& spec, int embed_dim, uint64_t init_seed);

  // n may be undefined for an unconditioned pass (FiLM sites skipped).
  // When training, dropout draws are consumed from *dropout_rng.
  Tensor forward(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
                 GeneratorTaps* taps = nullptr) const;

  // Encoder-side pass only (through the last tapped residual block), for
  // extracting contrastive features of a generated output.
  void encode(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
              GeneratorTaps* taps) const;

  // Per-site FiLM parameters (W, b) from a noise embedding.
  std::pair<Tensor, Tensor> film_params(const Tensor& n, int site) const;

  const GeneratorSpec& spec() const { return spec_; }
  int embed_dim() const { return embed_dim_; }
  // channel count of each contrastive tap layer
  std::vector<int> tap_channels() const;

  void collect(ParamMap& pm, const std::string& prefix) const;

 private:
  struct ResBlock {
    Conv2dLayer conv1, conv2;
  };

  Tensor run_block(const ResBlock& blk, const Tensor& x, bool training, Rng* dropout_rng) const;
  // shared encoder walk; returns the feature map after the last res block
  Tensor encode_impl(const Tensor& x, const Tensor& n, bool training, Rng* dropout_rng,
                     GeneratorTaps* taps, int stop_after_block, int* h1, int* w1, int* h0,
                     int* w0) const;

  GeneratorSpec spec_;
  int embed_dim_ = 0;
  Conv2dLayer down1_, down2_;
  std::vector<ResBlock> blocks_;
  ConvTranspose2dLayer up1_, up2_;
  std::vector<LinearLayer> film_w_, film_b_;
};

}  // namespace noisesim::models

#endif  // NOISESIM_MODELS_GENERATOR_HPP_
