// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_CORE_OPS_HPP_
#define NOISESIM_CORE_OPS_HPP_

#include <vector>

#include "noisesim/core/rng.hpp"
#include "noisesim/core/tensor.hpp"

namespace noisesim {

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor one_minus(const Tensor& a);  // 1 - a
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
// log(max(x, floor)); zero subgradient below the floor
Tensor log_floor(const Tensor& a, double floor);
Tensor dropout(const Tensor& a, double p, Rng& rng, bool training);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// mean over one axis of a rank-2 or rank-3 tensor
Tensor mean_axis(const Tensor& a, int axis);
Tensor mean_neg_log(const Tensor& a, double floor);  // mean(-log(max(a, floor)))
Tensor l1_loss(const Tensor& a, const Tensor& b);    // mean |a - b|

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]x[n,k]^T
// x: [n] or [B,n]; w: [m,n]; b: [m] (pass undefined Tensor for no bias)
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- shape ----
Tensor reshape(const Tensor& a, const Shape& s);
Tensor zero_pad2d(const Tensor& x, int top, int bottom, int left, int right);
Tensor reflect_pad2d(const Tensor& x, int p);
// [C,T]: drop the last n frames and prepend n zero frames
Tensor shift_right_time(const Tensor& x, int n);
// [C,T] -> [C,len]: crop or zero-pad at the end
Tensor crop_or_pad_time(const Tensor& x, int len);

// ---- convolution ----
// x: [Cin,H,W], w: [Cout,Cin,kh,kw], bias: [Cout] or undefined; zero padding
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride_h, int stride_w,
              int pad_h, int pad_w);
// x: [Cin,H,W], w: [Cin,Cout,kh,kw]; output size given explicitly
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride_h,
                        int stride_w, int pad_h, int pad_w, int out_h, int out_w);
// 1-D wrappers over the 2-D kernels; x: [Cin,T], w: [Cout,Cin,k] / [Cin,Cout,k]
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad_left,
              int pad_right);
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                        int out_len);

// ---- normalization / conditioning ----
// Per-channel standardization over spatial dims; x: [C,H,W] or [C,T]
Tensor instance_norm(const Tensor& x, double eps = 1e-5);
// Per-channel affine y[c,..] = w[c] * x[c,..] + b[c]; x: [C,H,W], w,b: [C]
Tensor film(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- patches / contrastive ----
// x: [C,H,W]; locs are flat spatial indices (h*W + w); result [N,C]
Tensor gather_locations(const Tensor& x, const std::vector<int>& locs);
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-10);
Tensor rowwise_dot(const Tensor& a, const Tensor& b);  // [N,D],[N,D] -> [N]
// pos: [I], negs: [I,J]; mean over I of CE against class 0 of
// [pos_i, neg_i1..neg_iJ] / tau
Tensor info_nce(const Tensor& pos, const Tensor& negs, double tau);

// ---- classification ----
Tensor cross_entropy_logits(const Tensor& logits, int label);  // [K] -> scalar

// magnitude of interleaved real/imag rows: x: [2F,T] (first F rows real,
// last F imag) -> [F,T]; sqrt(re^2 + im^2 + eps)
Tensor complex_magnitude(const Tensor& x, double eps = 1e-12);

// [1,F,T] -> [2,F,T]: appends a constant frequency-coordinate ramp channel
// (f / (F-1) in [0,1]); translation-equivariant stacks are otherwise blind
// to absolute frequency position
Tensor append_freq_coord(const Tensor& x);

}  // namespace noisesim

#endif  // NOISESIM_CORE_OPS_HPP_
