// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_MODELS_MODULES_HPP_
#define NOISESIM_MODELS_MODULES_HPP_

#include <Eigen/Dense>
#include <string>

#include "noisesim/core/ops.hpp"
#include "noisesim/core/rng.hpp"
#include "noisesim/core/tensor.hpp"

namespace noisesim::models {

// bridges between the dsp module's matrices (bins x frames) and network
// inputs; tensors are [1, F, T]
Tensor segment_to_tensor(const Eigen::MatrixXd& m);
Eigen::MatrixXd tensor_to_matrix(const Tensor& t);

inline constexpr double kWeightInitStd = 0.02;

struct Conv2dLayer {
  Tensor weight;  // [Cout,Cin,kh,kw]
  Tensor bias;    // [Cout]
  int stride_h = 1, stride_w = 1, pad_h = 0, pad_w = 0;

  static Conv2dLayer create(int cin, int cout, int k, int stride, int pad, Rng& rng,
                            double init_std = kWeightInitStd);
  Tensor forward(const Tensor& x) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct ConvTranspose2dLayer {
  Tensor weight;  // [Cin,Cout,kh,kw]
  Tensor bias;    // [Cout]
  int stride = 1, pad = 0;

  static ConvTranspose2dLayer create(int cin, int cout, int k, int stride, int pad, Rng& rng,
                                     double init_std = kWeightInitStd);
  Tensor forward(const Tensor& x, int out_h, int out_w) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct LinearLayer {
  Tensor weight;  // [out,in]
  Tensor bias;    // [out]

  static LinearLayer create(int in, int out, Rng& rng, double init_std);
  // all-zero weights with a constant bias (identity-start FiLM maps)
  static LinearLayer constant(int in, int out, double bias_value);
  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct Conv1dLayer {
  Tensor weight;  // [Cout,Cin,k]
  Tensor bias;
  int stride = 1, pad_left = 0, pad_right = 0;

  static Conv1dLayer create(int cin, int cout, int k, int stride, int pad_left, int pad_right,
                            Rng& rng, double init_std = kWeightInitStd);
  Tensor forward(const Tensor& x) const;
  void collect(ParamMap& pm, const std::string& prefix) const;
};

struct ConvTranspose1dLayer {
  Tensor weight;  // [Cin,Cout,k]
  Tensor bias;
  int stride = 1;

  static ConvTranspose1dLayer create(int cin, int cout, int k, int stride, Rng& rng,
                                     double init_std = kWeightInitStd);
  Tensor forward(const Tensor& x) const;  // raw length (T-1)*stride + k
  void collect(ParamMap& pm, const std::string& prefix) const;
};

}  // namespace noisesim::models

#endif  // NOISESIM_MODELS_MODULES_HPP_
