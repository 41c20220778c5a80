// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/core/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

namespace noisesim {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

void accumulate(const std::shared_ptr<Node>& p, const std::vector<double>& g) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  for (size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  NS_CHECK(a.shape() == b.shape(), ShapeError,
           what << ": shape mismatch " << shape_str(a.shape()) << " vs " << shape_str(b.shape()));
}

// Zero-padded patch extraction: cols is [C*kh*kw, OH*OW], row-major.
void im2col(const double* x, int C, int H, int W, int kh, int kw, int sh, int sw, int ph, int pw,
            int OH, int OW, double* cols) {
  const int64_t plane = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        double* row = cols + (static_cast<int64_t>(c * kh + i) * kw + j) * plane;
        for (int oh = 0; oh < OH; ++oh) {
          const int h = oh * sh - ph + i;
          double* dst = row + static_cast<int64_t>(oh) * OW;
          if (h < 0 || h >= H) {
            std::fill(dst, dst + OW, 0.0);
            continue;
          }
          const double* src = x + (static_cast<int64_t>(c) * H + h) * W;
          int ow = 0;
          // leading out-of-range
          for (; ow < OW && ow * sw - pw + j < 0; ++ow) dst[ow] = 0.0;
          for (; ow < OW; ++ow) {
            const int w = ow * sw - pw + j;
            if (w >= W) break;
            dst[ow] = src[w];
          }
          for (; ow < OW; ++ow) dst[ow] = 0.0;
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into the image.
void col2im_add(const double* cols, int C, int H, int W, int kh, int kw, int sh, int sw, int ph,
                int pw, int OH, int OW, double* x) {
  const int64_t plane = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const double* row = cols + (static_cast<int64_t>(c * kh + i) * kw + j) * plane;
        for (int oh = 0; oh < OH; ++oh) {
          const int h = oh * sh - ph + i;
          if (h < 0 || h >= H) continue;
          double* dst = x + (static_cast<int64_t>(c) * H + h) * W;
          const double* src = row + static_cast<int64_t>(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) {
            const int w = ow * sw - pw + j;
            if (w >= 0 && w < W) dst[w] += src[ow];
          }
        }
      }
    }
  }
}

int conv_out_dim(int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; }

Tensor unary_ew(const Tensor& a, const std::function<double(double)>& f,
                const std::function<double(double, double)>& dfdx_times_g) {
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) v[i] = f(a.data()[i]);
  auto an = a.node();
  return make_op(a.shape(), std::move(v), {a}, [an, dfdx_times_g](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += dfdx_times_g(an->value[i], n.grad[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) v[i] = a.data()[i] + b.data()[i];
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(v), {a, b}, [an, bn](Node& n) {
    accumulate(an, n.grad);
    accumulate(bn, n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) v[i] = a.data()[i] - b.data()[i];
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(v), {a, b}, [an, bn](Node& n) {
    accumulate(an, n.grad);
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) v[i] = a.data()[i] * b.data()[i];
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(v), {a, b}, [an, bn](Node& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i] * an->value[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary_ew(
      a, [c](double x) { return x + c; }, [](double, double g) { return g; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return unary_ew(
      a, [c](double x) { return x * c; }, [c](double, double g) { return c * g; });
}

Tensor one_minus(const Tensor& a) {
  return unary_ew(
      a, [](double x) { return 1.0 - x; }, [](double, double g) { return -g; });
}

Tensor relu(const Tensor& a) {
  return unary_ew(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double g) { return x > 0.0 ? g : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary_ew(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double g) { return x > 0.0 ? g : slope * g; });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
  auto an = a.node();
  auto vn = std::make_shared<std::vector<double>>(v);
  return make_op(a.shape(), std::move(v), {a}, [an, vn](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      const double s = (*vn)[i];
      an->grad[i] += n.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor log_floor(const Tensor& a, double floor) {
  NS_CHECK(floor > 0.0, InvalidInput, "log_floor: floor must be positive");
  return unary_ew(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double g) { return x > floor ? g / x : 0.0; });
}

Tensor dropout(const Tensor& a, double p, Rng& rng, bool training) {
  NS_CHECK(p >= 0.0 && p < 1.0, InvalidInput, "dropout: p must be in [0,1)");
  if (!training || p == 0.0) return a;
  auto mask = std::make_shared<std::vector<double>>(a.size());
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> v(a.size());
  for (int64_t i = 0; i < a.size(); ++i) {
    (*mask)[i] = (rng.uniform() >= p) ? keep_scale : 0.0;
    v[i] = a.data()[i] * (*mask)[i];
  }
  auto an = a.node();
  return make_op(a.shape(), std::move(v), {a}, [an, mask](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * (*mask)[i];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) s += a.data()[i];
  auto an = a.node();
  return make_op({1}, {s}, {a}, [an](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (auto& g : an->grad) g += n.grad[0];
  });
}

Tensor mean(const Tensor& a) { return mul_scalar(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor mean_axis(const Tensor& a, int axis) {
  NS_CHECK(a.rank() == 2 || a.rank() == 3, ShapeError, "mean_axis: rank must be 2 or 3");
  NS_CHECK(axis == 1, ShapeError, "mean_axis: only axis 1 supported");
  if (a.rank() == 2) {
    const int A = a.dim(0), B = a.dim(1);
    std::vector<double> v(A, 0.0);
    for (int i = 0; i < A; ++i) {
      double s = 0.0;
      for (int j = 0; j < B; ++j) s += a.data()[i * B + j];
      v[i] = s / B;
    }
    auto an = a.node();
    return make_op({A}, std::move(v), {a}, [an, A, B](Node& n) {
      if (!an->requires_grad) return;
      an->ensure_grad();
      for (int i = 0; i < A; ++i)
        for (int j = 0; j < B; ++j) an->grad[i * B + j] += n.grad[i] / B;
    });
  }
  const int A = a.dim(0), B = a.dim(1), C = a.dim(2);
  std::vector<double> v(static_cast<size_t>(A) * C, 0.0);
  for (int i = 0; i < A; ++i)
    for (int j = 0; j < B; ++j)
      for (int k = 0; k < C; ++k) v[i * C + k] += a.data()[(i * B + j) * C + k] / B;
  auto an = a.node();
  return make_op({A, C}, std::move(v), {a}, [an, A, B, C](Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < B; ++j)
        for (int k = 0; k < C; ++k) an->grad[(i * B + j) * C + k] += n.grad[i * C + k] / B;
  });
}

Tensor mean_neg_log(const Tensor& a, double floor) {
  return mul_scalar(mean(log_floor(a, floor)), -1.0);
}

Tensor l1_loss(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1_loss");
  double s = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
  s /= static_cast<double>(a.size());
  auto an = a.node(), bn = b.node();
  const double inv = 1.0 / static_cast<double>(a.size());
  return make_op({1}, {s}, {a, b}, [an, bn, inv](Node& n) {
    const double g = n.grad[0] * inv;
    for (int pass = 0; pass < 2; ++pass) {
      const auto& p = pass == 0 ? an : bn;
      if (!p->requires_grad) continue;
      p->ensure_grad();
      const double sign_mult = pass == 0 ? 1.0 : -1.0;
      for (size_t i = 0; i < an->value.size(); ++i) {
        const double d = an->value[i] - bn->value[i];
        const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        p->grad[i] += g * sg * sign_mult;
      }
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  NS_CHECK(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), ShapeError,
           "matmul: " << shape_str(a.shape()) << " x " << shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n2 = b.dim(1);
  std::vector<double> v(static_cast<size_t>(m) * n2);
  CMapMat A(a.data(), m, k), B(b.data(), k, n2);
  MapMat(v.data(), m, n2).noalias() = A * B;
  auto an = a.node(), bn = b.node();
  return make_op({m, n2}, std::move(v), {a, b}, [an, bn, m, k, n2](Node& n) {
    CMapMat G(n.grad.data(), m, n2);
    if (an->requires_grad) {
      an->ensure_grad();
      CMapMat B(bn->value.data(), k, n2);
      MapMat(an->grad.data(), m, k).noalias() += G * B.transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      CMapMat A(an->value.data(), m, k);
      MapMat(bn->grad.data(), k, n2).noalias() += A.transpose() * G;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  NS_CHECK(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(1), ShapeError,
           "matmul_nt: " << shape_str(a.shape()) << " x " << shape_str(b.shape()) << "^T");
  const int m = a.dim(0), k = a.dim(1), n2 = b.dim(0);
  std::vector<double> v(static_cast<size_t>(m) * n2);
  CMapMat A(a.data(), m, k), B(b.data(), n2, k);
  MapMat(v.data(), m, n2).noalias() = A * B.transpose();
  auto an = a.node(), bn = b.node();
  return make_op({m, n2}, std::move(v), {a, b}, [an, bn, m, k, n2](Node& n) {
    CMapMat G(n.grad.data(), m, n2);
    if (an->requires_grad) {
      an->ensure_grad();
      CMapMat B(bn->value.data(), n2, k);
      MapMat(an->grad.data(), m, k).noalias() += G * B;
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      CMapMat A(an->value.data(), m, k);
      MapMat(bn->grad.data(), n2, k).noalias() += G.transpose() * A;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  NS_CHECK(w.rank() == 2, ShapeError, "linear: weight must be [out,in]");
  const int out_dim = w.dim(0), in_dim = w.dim(1);
  if (b.defined())
    NS_CHECK(b.rank() == 1 && b.dim(0) == out_dim, ShapeError, "linear: bad bias shape");
  const bool batched = x.rank() == 2;
  const int batch = batched ? x.dim(0) : 1;
  NS_CHECK((batched ? x.dim(1) : x.dim(0)) == in_dim, ShapeError,
           "linear: input " << shape_str(x.shape()) << " vs weight " << shape_str(w.shape()));

  std::vector<double> v(static_cast<size_t>(batch) * out_dim);
  CMapMat X(x.data(), batch, in_dim), W(w.data(), out_dim, in_dim);
  MapMat Y(v.data(), batch, out_dim);
  Y.noalias() = X * W.transpose();
  if (b.defined()) {
    for (int i = 0; i < batch; ++i)
      for (int j = 0; j < out_dim; ++j) v[static_cast<size_t>(i) * out_dim + j] += b.data()[j];
  }
  Shape out_shape = batched ? Shape{batch, out_dim} : Shape{out_dim};
  auto xn = x.node(), wn = w.node();
  auto bn2 = b.defined() ? b.node() : nullptr;
  return make_op(out_shape, std::move(v), {x, w, b},
                 [xn, wn, bn2, batch, in_dim, out_dim](Node& n) {
                   CMapMat G(n.grad.data(), batch, out_dim);
                   if (xn->requires_grad) {
                     xn->ensure_grad();
                     CMapMat W(wn->value.data(), out_dim, in_dim);
                     MapMat(xn->grad.data(), batch, in_dim).noalias() += G * W;
                   }
                   if (wn->requires_grad) {
                     wn->ensure_grad();
                     CMapMat X(xn->value.data(), batch, in_dim);
                     MapMat(wn->grad.data(), out_dim, in_dim).noalias() += G.transpose() * X;
                   }
                   if (bn2 && bn2->requires_grad) {
                     bn2->ensure_grad();
                     for (int i = 0; i < batch; ++i)
                       for (int j = 0; j < out_dim; ++j)
                         bn2->grad[j] += n.grad[static_cast<size_t>(i) * out_dim + j];
                   }
                 });
}

Tensor reshape(const Tensor& a, const Shape& s) {
  NS_CHECK(numel(s) == a.size(), ShapeError,
           "reshape: " << shape_str(a.shape()) << " -> " << shape_str(s));
  std::vector<double> v(a.vec());
  auto an = a.node();
  return make_op(s, std::move(v), {a}, [an](Node& n) { accumulate(an, n.grad); });
}

Tensor zero_pad2d(const Tensor& x, int top, int bottom, int left, int right) {
  NS_CHECK(x.rank() == 3, ShapeError, "zero_pad2d: expected [C,H,W]");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int OH = H + top + bottom, OW = W + left + right;
  std::vector<double> v(static_cast<size_t>(C) * OH * OW, 0.0);
  for (int c = 0; c < C; ++c)
    for (int h = 0; h < H; ++h) {
      const double* src = x.data() + (static_cast<int64_t>(c) * H + h) * W;
      double* dst = v.data() + (static_cast<int64_t>(c) * OH + h + top) * OW + left;
      std::copy(src, src + W, dst);
    }
  auto xn = x.node();
  return make_op({C, OH, OW}, std::move(v), {x}, [xn, C, H, W, OH, OW, top, left](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h) {
        const double* src = n.grad.data() + (static_cast<int64_t>(c) * OH + h + top) * OW + left;
        double* dst = xn->grad.data() + (static_cast<int64_t>(c) * H + h) * W;
        for (int w = 0; w < W; ++w) dst[w] += src[w];
      }
  });
}

namespace {
inline int reflect_index(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}
}  // namespace

Tensor reflect_pad2d(const Tensor& x, int p) {
  NS_CHECK(x.rank() == 3, ShapeError, "reflect_pad2d: expected [C,H,W]");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  NS_CHECK(p < H && p < W, InvalidInput, "reflect_pad2d: pad too large for input");
  const int OH = H + 2 * p, OW = W + 2 * p;
  std::vector<double> v(static_cast<size_t>(C) * OH * OW);
  for (int c = 0; c < C; ++c)
    for (int oh = 0; oh < OH; ++oh) {
      const int h = reflect_index(oh - p, H);
      const double* src = x.data() + (static_cast<int64_t>(c) * H + h) * W;
      double* dst = v.data() + (static_cast<int64_t>(c) * OH + oh) * OW;
      for (int ow = 0; ow < OW; ++ow) dst[ow] = src[reflect_index(ow - p, W)];
    }
  auto xn = x.node();
  return make_op({C, OH, OW}, std::move(v), {x}, [xn, C, H, W, OH, OW, p](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < OH; ++oh) {
        const int h = reflect_index(oh - p, H);
        const double* src = n.grad.data() + (static_cast<int64_t>(c) * OH + oh) * OW;
        double* dst = xn->grad.data() + (static_cast<int64_t>(c) * H + h) * W;
        for (int ow = 0; ow < OW; ++ow) dst[reflect_index(ow - p, W)] += src[ow];
      }
  });
}

Tensor shift_right_time(const Tensor& x, int n_shift) {
  NS_CHECK(x.rank() == 2, ShapeError, "shift_right_time: expected [C,T]");
  NS_CHECK(n_shift >= 0, InvalidInput, "shift_right_time: negative shift");
  const int C = x.dim(0), T = x.dim(1);
  std::vector<double> v(static_cast<size_t>(C) * T, 0.0);
  for (int c = 0; c < C; ++c)
    for (int t = n_shift; t < T; ++t)
      v[static_cast<size_t>(c) * T + t] = x.data()[static_cast<size_t>(c) * T + t - n_shift];
  auto xn = x.node();
  return make_op({C, T}, std::move(v), {x}, [xn, C, T, n_shift](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int t = n_shift; t < T; ++t)
        xn->grad[static_cast<size_t>(c) * T + t - n_shift] +=
            n.grad[static_cast<size_t>(c) * T + t];
  });
}

Tensor crop_or_pad_time(const Tensor& x, int len) {
  NS_CHECK(x.rank() == 2, ShapeError, "crop_or_pad_time: expected [C,T]");
  const int C = x.dim(0), T = x.dim(1);
  const int keep = std::min(T, len);
  std::vector<double> v(static_cast<size_t>(C) * len, 0.0);
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < keep; ++t)
      v[static_cast<size_t>(c) * len + t] = x.data()[static_cast<size_t>(c) * T + t];
  auto xn = x.node();
  return make_op({C, len}, std::move(v), {x}, [xn, C, T, len, keep](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < keep; ++t)
        xn->grad[static_cast<size_t>(c) * T + t] += n.grad[static_cast<size_t>(c) * len + t];
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride_h, int stride_w,
              int pad_h, int pad_w) {
  NS_CHECK(x.rank() == 3, ShapeError, "conv2d: input must be [C,H,W]");
  NS_CHECK(w.rank() == 4, ShapeError, "conv2d: weight must be [Cout,Cin,kh,kw]");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  NS_CHECK(w.dim(1) == C, ShapeError,
           "conv2d: weight expects " << w.dim(1) << " channels, input has " << C);
  const int OH = conv_out_dim(H, kh, stride_h, pad_h);
  const int OW = conv_out_dim(W, kw, stride_w, pad_w);
  NS_CHECK(OH > 0 && OW > 0, ShapeError, "conv2d: output would be empty");
  if (bias.defined())
    NS_CHECK(bias.rank() == 1 && bias.dim(0) == Cout, ShapeError, "conv2d: bad bias shape");

  const int K = C * kh * kw;
  const int64_t N = static_cast<int64_t>(OH) * OW;
  auto cols = std::make_shared<std::vector<double>>(static_cast<size_t>(K) * N);
  im2col(x.data(), C, H, W, kh, kw, stride_h, stride_w, pad_h, pad_w, OH, OW, cols->data());

  std::vector<double> v(static_cast<size_t>(Cout) * N);
  {
    CMapMat Wm(w.data(), Cout, K), Cm(cols->data(), K, N);
    MapMat(v.data(), Cout, N).noalias() = Wm * Cm;
  }
  if (bias.defined()) {
    for (int co = 0; co < Cout; ++co) {
      const double bv = bias.data()[co];
      double* row = v.data() + static_cast<int64_t>(co) * N;
      for (int64_t i = 0; i < N; ++i) row[i] += bv;
    }
  }

  auto xn = x.node(), wn = w.node();
  auto bn = bias.defined() ? bias.node() : nullptr;
  return make_op(
      {Cout, OH, OW}, std::move(v), {x, w, bias},
      [=](Node& n) {
        CMapMat G(n.grad.data(), Cout, N);
        if (wn->requires_grad) {
          wn->ensure_grad();
          CMapMat Cm(cols->data(), K, N);
          MapMat(wn->grad.data(), Cout, K).noalias() += G * Cm.transpose();
        }
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          for (int co = 0; co < Cout; ++co) {
            double s = 0.0;
            const double* row = n.grad.data() + static_cast<int64_t>(co) * N;
            for (int64_t i = 0; i < N; ++i) s += row[i];
            bn->grad[co] += s;
          }
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          std::vector<double> dcols(static_cast<size_t>(K) * N);
          CMapMat Wm(wn->value.data(), Cout, K);
          MapMat(dcols.data(), K, N).noalias() = Wm.transpose() * G;
          col2im_add(dcols.data(), C, H, W, kh, kw, stride_h, stride_w, pad_h, pad_w, OH, OW,
                     xn->grad.data());
        }
      });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride_h,
                        int stride_w, int pad_h, int pad_w, int out_h, int out_w) {
  NS_CHECK(x.rank() == 3, ShapeError, "conv_transpose2d: input must be [C,H,W]");
  NS_CHECK(w.rank() == 4, ShapeError, "conv_transpose2d: weight must be [Cin,Cout,kh,kw]");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  NS_CHECK(w.dim(0) == C, ShapeError,
           "conv_transpose2d: weight expects " << w.dim(0) << " channels, input has " << C);
  const int Cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  // Geometry must be consistent with the paired forward convolution.
  NS_CHECK(conv_out_dim(out_h, kh, stride_h, pad_h) == H &&
               conv_out_dim(out_w, kw, stride_w, pad_w) == W,
           ShapeError, "conv_transpose2d: output size " << out_h << "x" << out_w
                                                        << " inconsistent with input "
                                                        << H << "x" << W);
  if (bias.defined())
    NS_CHECK(bias.rank() == 1 && bias.dim(0) == Cout, ShapeError,
             "conv_transpose2d: bad bias shape");

  const int K = Cout * kh * kw;
  const int64_t N = static_cast<int64_t>(H) * W;
  std::vector<double> tmp(static_cast<size_t>(K) * N);
  {
    CMapMat Wm(w.data(), C, K), X(x.data(), C, N);
    MapMat(tmp.data(), K, N).noalias() = Wm.transpose() * X;
  }
  std::vector<double> v(static_cast<size_t>(Cout) * out_h * out_w, 0.0);
  col2im_add(tmp.data(), Cout, out_h, out_w, kh, kw, stride_h, stride_w, pad_h, pad_w, H, W,
             v.data());
  if (bias.defined()) {
    const int64_t plane = static_cast<int64_t>(out_h) * out_w;
    for (int co = 0; co < Cout; ++co) {
      const double bv = bias.data()[co];
      double* row = v.data() + co * plane;
      for (int64_t i = 0; i < plane; ++i) row[i] += bv;
    }
  }

  auto xn = x.node(), wn = w.node();
  auto bn = bias.defined() ? bias.node() : nullptr;
  return make_op(
      {Cout, out_h, out_w}, std::move(v), {x, w, bias},
      [=](Node& n) {
        // dtmp = im2col(dout); dx = W * dtmp; dW = x * dtmp^T
        std::vector<double> dtmp(static_cast<size_t>(K) * N);
        im2col(n.grad.data(), Cout, out_h, out_w, kh, kw, stride_h, stride_w, pad_h, pad_w, H, W,
               dtmp.data());
        CMapMat Dt(dtmp.data(), K, N);
        if (xn->requires_grad) {
          xn->ensure_grad();
          CMapMat Wm(wn->value.data(), C, K);
          MapMat(xn->grad.data(), C, N).noalias() += Wm * Dt;
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          CMapMat X(xn->value.data(), C, N);
          MapMat(wn->grad.data(), C, K).noalias() += X * Dt.transpose();
        }
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          const int64_t plane = static_cast<int64_t>(out_h) * out_w;
          for (int co = 0; co < Cout; ++co) {
            double s = 0.0;
            const double* row = n.grad.data() + co * plane;
            for (int64_t i = 0; i < plane; ++i) s += row[i];
            bn->grad[co] += s;
          }
        }
      });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad_left,
              int pad_right) {
  NS_CHECK(x.rank() == 2 && w.rank() == 3, ShapeError, "conv1d: x [C,T], w [Cout,Cin,k]");
  const int C = x.dim(0), T = x.dim(1);
  const int Cout = w.dim(0), k = w.dim(2);
  Tensor x3 = reshape(x, {C, 1, T});
  if (pad_left || pad_right) x3 = zero_pad2d(x3, 0, 0, pad_left, pad_right);
  Tensor w4 = reshape(w, {Cout, w.dim(1), 1, k});
  Tensor y = conv2d(x3, w4, bias, 1, stride, 0, 0);
  return reshape(y, {Cout, y.dim(2)});
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                        int out_len) {
  NS_CHECK(x.rank() == 2 && w.rank() == 3, ShapeError, "conv_transpose1d: x [C,T], w [Cin,Cout,k]");
  const int C = x.dim(0), T = x.dim(1);
  const int Cout = w.dim(1), k = w.dim(2);
  Tensor x3 = reshape(x, {C, 1, T});
  Tensor w4 = reshape(w, {C, Cout, 1, k});
  Tensor y = conv_transpose2d(x3, w4, bias, 1, stride, 0, 0, 1, out_len);
  return reshape(y, {Cout, out_len});
}

Tensor instance_norm(const Tensor& x, double eps) {
  NS_CHECK(x.rank() == 2 || x.rank() == 3, ShapeError, "instance_norm: expected [C,H,W] or [C,T]");
  const int C = x.dim(0);
  const int64_t S = x.size() / C;
  NS_CHECK(S > 1, ShapeError, "instance_norm: needs more than one element per channel");
  std::vector<double> v(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(C);
  for (int c = 0; c < C; ++c) {
    const double* src = x.data() + c * S;
    double mu = 0.0;
    for (int64_t i = 0; i < S; ++i) mu += src[i];
    mu /= S;
    double var = 0.0;
    for (int64_t i = 0; i < S; ++i) var += (src[i] - mu) * (src[i] - mu);
    var /= S;
    const double istd = 1.0 / std::sqrt(var + eps);
    (*inv_std)[c] = istd;
    double* dst = v.data() + c * S;
    for (int64_t i = 0; i < S; ++i) dst[i] = (src[i] - mu) * istd;
  }
  auto xn = x.node();
  auto yv = std::make_shared<std::vector<double>>(v);
  return make_op(x.shape(), std::move(v), {x}, [xn, yv, inv_std, C, S](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c) {
      const double* g = n.grad.data() + c * S;
      const double* y = yv->data() + c * S;
      double g_mean = 0.0, gy_mean = 0.0;
      for (int64_t i = 0; i < S; ++i) {
        g_mean += g[i];
        gy_mean += g[i] * y[i];
      }
      g_mean /= S;
      gy_mean /= S;
      const double istd = (*inv_std)[c];
      double* dx = xn->grad.data() + c * S;
      for (int64_t i = 0; i < S; ++i) dx[i] += istd * (g[i] - g_mean - y[i] * gy_mean);
    }
  });
}

Tensor film(const Tensor& x, const Tensor& w, const Tensor& b) {
  NS_CHECK(x.rank() >= 2, ShapeError, "film: expected [C,...]");
  const int C = x.dim(0);
  NS_CHECK(w.rank() == 1 && b.rank() == 1 && w.dim(0) == C && b.dim(0) == C, ShapeError,
           "film: channel mismatch, x " << shape_str(x.shape()) << ", w " << shape_str(w.shape())
                                        << ", b " << shape_str(b.shape()));
  const int64_t S = x.size() / C;
  std::vector<double> v(x.size());
  for (int c = 0; c < C; ++c) {
    const double wc = w.data()[c], bc = b.data()[c];
    const double* src = x.data() + c * S;
    double* dst = v.data() + c * S;
    for (int64_t i = 0; i < S; ++i) dst[i] = wc * src[i] + bc;
  }
  auto xn = x.node(), wn = w.node(), bn = b.node();
  return make_op(x.shape(), std::move(v), {x, w, b}, [xn, wn, bn, C, S](Node& n) {
    for (int c = 0; c < C; ++c) {
      const double* g = n.grad.data() + c * S;
      if (xn->requires_grad) {
        xn->ensure_grad();
        const double wc = wn->value[c];
        double* dx = xn->grad.data() + c * S;
        for (int64_t i = 0; i < S; ++i) dx[i] += wc * g[i];
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        const double* src = xn->value.data() + c * S;
        double s = 0.0;
        for (int64_t i = 0; i < S; ++i) s += g[i] * src[i];
        wn->grad[c] += s;
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        double s = 0.0;
        for (int64_t i = 0; i < S; ++i) s += g[i];
        bn->grad[c] += s;
      }
    }
  });
}

Tensor gather_locations(const Tensor& x, const std::vector<int>& locs) {
  NS_CHECK(x.rank() == 3, ShapeError, "gather_locations: expected [C,H,W]");
  const int C = x.dim(0);
  const int64_t S = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  const int N = static_cast<int>(locs.size());
  for (int loc : locs)
    NS_CHECK(loc >= 0 && loc < S, InvalidInput, "gather_locations: location out of range");
  std::vector<double> v(static_cast<size_t>(N) * C);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < C; ++c) v[static_cast<size_t>(i) * C + c] = x.data()[c * S + locs[i]];
  auto xn = x.node();
  auto locs_copy = std::make_shared<std::vector<int>>(locs);
  return make_op({N, C}, std::move(v), {x}, [xn, locs_copy, C, S, N](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < C; ++c)
        xn->grad[c * S + (*locs_copy)[i]] += n.grad[static_cast<size_t>(i) * C + c];
  });
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
  NS_CHECK(x.rank() == 2, ShapeError, "l2_normalize_rows: expected [N,D]");
  const int N = x.dim(0), D = x.dim(1);
  std::vector<double> v(x.size());
  auto inv_norm = std::make_shared<std::vector<double>>(N);
  for (int i = 0; i < N; ++i) {
    const double* src = x.data() + static_cast<int64_t>(i) * D;
    double n2 = 0.0;
    for (int j = 0; j < D; ++j) n2 += src[j] * src[j];
    const double inv = 1.0 / std::sqrt(n2 + eps);
    (*inv_norm)[i] = inv;
    double* dst = v.data() + static_cast<int64_t>(i) * D;
    for (int j = 0; j < D; ++j) dst[j] = src[j] * inv;
  }
  auto xn = x.node();
  return make_op(x.shape(), std::move(v), {x}, [xn, inv_norm, N, D](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int i = 0; i < N; ++i) {
      const double* g = n.grad.data() + static_cast<int64_t>(i) * D;
      const double* src = xn->value.data() + static_cast<int64_t>(i) * D;
      const double inv = (*inv_norm)[i];
      double gx = 0.0;
      for (int j = 0; j < D; ++j) gx += g[j] * src[j];
      double* dx = xn->grad.data() + static_cast<int64_t>(i) * D;
      for (int j = 0; j < D; ++j) dx[j] += inv * (g[j] - src[j] * gx * inv * inv);
    }
  });
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "rowwise_dot");
  NS_CHECK(a.rank() == 2, ShapeError, "rowwise_dot: expected [N,D]");
  const int N = a.dim(0), D = a.dim(1);
  std::vector<double> v(N);
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    const double* pa = a.data() + static_cast<int64_t>(i) * D;
    const double* pb = b.data() + static_cast<int64_t>(i) * D;
    for (int j = 0; j < D; ++j) s += pa[j] * pb[j];
    v[i] = s;
  }
  auto an = a.node(), bn = b.node();
  return make_op({N}, std::move(v), {a, b}, [an, bn, N, D](Node& n) {
    for (int i = 0; i < N; ++i) {
      const double g = n.grad[i];
      if (an->requires_grad) {
        an->ensure_grad();
        for (int j = 0; j < D; ++j)
          an->grad[static_cast<int64_t>(i) * D + j] +=
              g * bn->value[static_cast<int64_t>(i) * D + j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int j = 0; j < D; ++j)
          bn->grad[static_cast<int64_t>(i) * D + j] +=
              g * an->value[static_cast<int64_t>(i) * D + j];
      }
    }
  });
}

Tensor info_nce(const Tensor& pos, const Tensor& negs, double tau) {
  NS_CHECK(tau > 0.0, InvalidInput, "info_nce: temperature must be positive");
  NS_CHECK(pos.rank() == 1 && negs.rank() == 2 && negs.dim(0) == pos.dim(0), ShapeError,
           "info_nce: pos " << shape_str(pos.shape()) << ", negs " << shape_str(negs.shape()));
  const int I = pos.dim(0), J = negs.dim(1);
  // Per row i, cross entropy of class 0 over logits [pos_i, neg_i1..neg_iJ]/tau.
  auto softmax = std::make_shared<std::vector<double>>(static_cast<size_t>(I) * (J + 1));
  double loss = 0.0;
  for (int i = 0; i < I; ++i) {
    double m = pos.data()[i];
    const double* nr = negs.data() + static_cast<int64_t>(i) * J;
    for (int j = 0; j < J; ++j) m = std::max(m, nr[j]);
    double denom = std::exp((pos.data()[i] - m) / tau);
    double* sm = softmax->data() + static_cast<int64_t>(i) * (J + 1);
    sm[0] = denom;
    for (int j = 0; j < J; ++j) {
      sm[j + 1] = std::exp((nr[j] - m) / tau);
      denom += sm[j + 1];
    }
    for (int j = 0; j <= J; ++j) sm[j] /= denom;
    loss += -std::log(sm[0]);
  }
  loss /= I;
  auto pn = pos.node(), nn = negs.node();
  return make_op({1}, {loss}, {pos, negs}, [pn, nn, softmax, I, J, tau](Node& n) {
    const double g = n.grad[0] / (I * tau);
    for (int i = 0; i < I; ++i) {
      const double* sm = softmax->data() + static_cast<int64_t>(i) * (J + 1);
      if (pn->requires_grad) {
        pn->ensure_grad();
        pn->grad[i] += g * (sm[0] - 1.0);
      }
      if (nn->requires_grad) {
        nn->ensure_grad();
        for (int j = 0; j < J; ++j) nn->grad[static_cast<int64_t>(i) * J + j] += g * sm[j + 1];
      }
    }
  });
}

Tensor cross_entropy_logits(const Tensor& logits, int label) {
  NS_CHECK(logits.rank() == 1, ShapeError, "cross_entropy_logits: expected [K]");
  const int K = logits.dim(0);
  NS_CHECK(label >= 0 && label < K, InvalidInput, "cross_entropy_logits: label out of range");
  double m = logits.data()[0];
  for (int k = 1; k < K; ++k) m = std::max(m, logits.data()[k]);
  auto sm = std::make_shared<std::vector<double>>(K);
  double denom = 0.0;
  for (int k = 0; k < K; ++k) {
    (*sm)[k] = std::exp(logits.data()[k] - m);
    denom += (*sm)[k];
  }
  for (int k = 0; k < K; ++k) (*sm)[k] /= denom;
  const double loss = -std::log((*sm)[label]);
  auto ln = logits.node();
  return make_op({1}, {loss}, {logits}, [ln, sm, K, label](Node& n) {
    if (!ln->requires_grad) return;
    ln->ensure_grad();
    for (int k = 0; k < K; ++k)
      ln->grad[k] += n.grad[0] * ((*sm)[k] - (k == label ? 1.0 : 0.0));
  });
}

Tensor append_freq_coord(const Tensor& x) {
  NS_CHECK(x.rank() == 3 && x.dim(0) == 1, ShapeError,
           "append_freq_coord: expected [1,F,T], got " << shape_str(x.shape()));
  const int F = x.dim(1), T = x.dim(2);
  std::vector<double> v(static_cast<size_t>(2) * F * T);
  std::copy(x.data(), x.data() + x.size(), v.data());
  for (int f = 0; f < F; ++f) {
    const double c = F > 1 ? static_cast<double>(f) / (F - 1) : 0.0;
    for (int t = 0; t < T; ++t) v[static_cast<size_t>(F + f) * T + t] = c;
  }
  auto xn = x.node();
  return make_op({2, F, T}, std::move(v), {x}, [xn, F, T](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int64_t i = 0; i < static_cast<int64_t>(F) * T; ++i) xn->grad[i] += n.grad[i];
  });
}

Tensor complex_magnitude(const Tensor& x, double eps) {
  NS_CHECK(x.rank() == 2 && x.dim(0) % 2 == 0, ShapeError,
           "complex_magnitude: expected [2F,T] with real rows then imag rows");
  const int F = x.dim(0) / 2, T = x.dim(1);
  std::vector<double> v(static_cast<size_t>(F) * T);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) {
      const double re = x.data()[static_cast<int64_t>(f) * T + t];
      const double im = x.data()[static_cast<int64_t>(f + F) * T + t];
      v[static_cast<size_t>(f) * T + t] = std::sqrt(re * re + im * im + eps);
    }
  auto xn = x.node();
  auto mag = std::make_shared<std::vector<double>>(v);
  return make_op({F, T}, std::move(v), {x}, [xn, mag, F, T](Node& n) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int f = 0; f < F; ++f)
      for (int t = 0; t < T; ++t) {
        const int64_t i = static_cast<int64_t>(f) * T + t;
        const double g = n.grad[i] / (*mag)[i];
        xn->grad[i] += g * xn->value[i];
        xn->grad[static_cast<int64_t>(f + F) * T + t] +=
            g * xn->value[static_cast<int64_t>(f + F) * T + t];
      }
  });
}

}  // namespace noisesim
