// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_MODELS_DISCRIMINATOR_HPP_
#define NOISESIM_MODELS_DISCRIMINATOR_HPP_

#include <vector>

#include "noisesim/models/modules.hpp"

namespace noisesim::models {

struct DiscriminatorSpec {
  int base_channels = 64;
};

// Patch discriminator: five 4x4 convolutions (strides 2,2,2,1,1, zero
// padding 1) with LeakyReLU between them; the output map goes through a
// sigmoid so each patch score lies in (0,1).
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorSpec& spec, uint64_t init_seed);

  // x: [1,H,W] -> sigmoid score map [H',W']
  Tensor forward(const Tensor& x) const;

  // Closed-form score-map edge for one spatial dimension.
  static int score_map_dim(int n);

  const DiscriminatorSpec& spec() const { return spec_; }
  void collect(ParamMap& pm, const std::string& prefix) const;

 private:
  DiscriminatorSpec spec_;
  std::vector<Conv2dLayer> layers_;
};

}  // namespace noisesim::models

#endif  // NOISESIM_MODELS_DISCRIMINATOR_HPP_
