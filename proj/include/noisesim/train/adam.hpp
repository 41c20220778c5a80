// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_TRAIN_ADAM_HPP_
#define NOISESIM_TRAIN_ADAM_HPP_

#include <map>
#include <string>
#include <vector>

#include "noisesim/core/serialize.hpp"
#include "noisesim/core/tensor.hpp"

namespace noisesim::train {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

  // Applies accumulated gradients; parameters without a gradient are skipped.
  void step(ParamMap& params);

  int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  void store(Archive& ar, const std::string& prefix) const;
  void load(const Archive& ar, const std::string& prefix);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace noisesim::train

#endif  // NOISESIM_TRAIN_ADAM_HPP_
