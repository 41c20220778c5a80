// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/models/modules.hpp"

namespace noisesim::models {

Tensor segment_to_tensor(const Eigen::MatrixXd& m) {
  const int f = static_cast<int>(m.rows()), t = static_cast<int>(m.cols());
  std::vector<double> v(static_cast<size_t>(f) * t);
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < t; ++j) v[static_cast<size_t>(i) * t + j] = m(i, j);
  return Tensor::from_vector({1, f, t}, std::move(v));
}

Eigen::MatrixXd tensor_to_matrix(const Tensor& t) {
  NS_CHECK(t.rank() == 2 || (t.rank() == 3 && t.dim(0) == 1), ShapeError,
           "tensor_to_matrix: expected [F,T] or [1,F,T], got " << shape_str(t.shape()));
  const int f = t.rank() == 2 ? t.dim(0) : t.dim(1);
  const int tt = t.rank() == 2 ? t.dim(1) : t.dim(2);
  Eigen::MatrixXd m(f, tt);
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < tt; ++j) m(i, j) = t.data()[static_cast<size_t>(i) * tt + j];
  return m;
}

Conv2dLayer Conv2dLayer::create(int cin, int cout, int k, int stride, int pad, Rng& rng,
                                double init_std) {
  Conv2dLayer l;
  l.weight = Tensor::randn({cout, cin, k, k}, rng, init_std, true);
  l.bias = Tensor::zeros({cout}, true);
  l.stride_h = l.stride_w = stride;
  l.pad_h = l.pad_w = pad;
  return l;
}

Tensor Conv2dLayer::forward(const Tensor& x) const {
  return conv2d(x, weight, bias, stride_h, stride_w, pad_h, pad_w);
}

void Conv2dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".weight", weight);
  pm.add(prefix + ".bias", bias);
}

ConvTranspose2dLayer ConvTranspose2dLayer::create(int cin, int cout, int k, int stride, int pad,
                                                  Rng& rng, double init_std) {
  ConvTranspose2dLayer l;
  l.weight = Tensor::randn({cin, cout, k, k}, rng, init_std, true);
  l.bias = Tensor::zeros({cout}, true);
  l.stride = stride;
  l.pad = pad;
  return l;
}

Tensor ConvTranspose2dLayer::forward(const Tensor& x, int out_h, int out_w) const {
  return conv_transpose2d(x, weight, bias, stride, stride, pad, pad, out_h, out_w);
}

void ConvTranspose2dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".weight", weight);
  pm.add(prefix + ".bias", bias);
}

LinearLayer LinearLayer::create(int in, int out, Rng& rng, double init_std) {
  LinearLayer l;
  l.weight = Tensor::randn({out, in}, rng, init_std, true);
  l.bias = Tensor::zeros({out}, true);
  return l;
}

LinearLayer LinearLayer::constant(int in, int out, double bias_value) {
  LinearLayer l;
  l.weight = Tensor::zeros({out, in}, true);
  l.bias = Tensor::full({out}, bias_value, true);
  return l;
}

void LinearLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".weight", weight);
  pm.add(prefix + ".bias", bias);
}

Conv1dLayer Conv1dLayer::create(int cin, int cout, int k, int stride, int pad_left, int pad_right,
                                Rng& rng, double init_std) {
  Conv1dLayer l;
  l.weight = Tensor::randn({cout, cin, k}, rng, init_std, true);
  l.bias = Tensor::zeros({cout}, true);
  l.stride = stride;
  l.pad_left = pad_left;
  l.pad_right = pad_right;
  return l;
}

Tensor Conv1dLayer::forward(const Tensor& x) const {
  return conv1d(x, weight, bias, stride, pad_left, pad_right);
}

void Conv1dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".weight", weight);
  pm.add(prefix + ".bias", bias);
}

ConvTranspose1dLayer ConvTranspose1dLayer::create(int cin, int cout, int k, int stride, Rng& rng,
                                                  double init_std) {
  ConvTranspose1dLayer l;
  l.weight = Tensor::randn({cin, cout, k}, rng, init_std, true);
  l.bias = Tensor::zeros({cout}, true);
  l.stride = stride;
  return l;
}

Tensor ConvTranspose1dLayer::forward(const Tensor& x) const {
  const int t = x.dim(1);
  const int k = weight.dim(2);
  return conv_transpose1d(x, weight, bias, stride, (t - 1) * stride + k);
}

void ConvTranspose1dLayer::collect(ParamMap& pm, const std::string& prefix) const {
  pm.add(prefix + ".weight", weight);
  pm.add(prefix + ".bias", bias);
}

}  // namespace noisesim::models
