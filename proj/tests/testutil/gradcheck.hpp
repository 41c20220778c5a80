// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_TESTS_TESTUTIL_GRADCHECK_HPP_
#define NOISESIM_TESTS_TESTUTIL_GRADCHECK_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "noisesim/core/tensor.hpp"

namespace noisesim::testutil {

// Central finite differences against reverse-mode gradients. loss_fn must
// rebuild the graph from the current values of `inputs` on every call.
// Per coordinate the error is minimized over the supplied step sizes: a
// kink (relu-style) crossed at one h is stepped over at a smaller one,
// while a wrong analytic gradient stays wrong at every h. Returns the
// worst per-coordinate relative error.
inline double max_grad_rel_error_steps(std::vector<Tensor> inputs,
                                       const std::function<Tensor()>& loss_fn,
                                       const std::vector<double>& steps) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tensor loss = loss_fn();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs) {
    if (t.grad().empty())
      analytic.emplace_back(t.size(), 0.0);
    else
      analytic.push_back(t.grad());
  }

  double worst = 0.0;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor& t = inputs[ti];
    for (int64_t i = 0; i < t.size(); ++i) {
      const double orig = t.data()[i];
      const double a = analytic[ti][i];
      double best = std::numeric_limits<double>::infinity();
      for (double h : steps) {
        t.data()[i] = orig + h;
        const double fp = loss_fn().item();
        t.data()[i] = orig - h;
        const double fm = loss_fn().item();
        t.data()[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
        best = std::min(best, std::abs(a - numeric) / denom);
        if (best < 1e-7) break;
      }
      worst = std::max(worst, best);
    }
  }
  return worst;
}

inline double max_grad_rel_error(std::vector<Tensor> inputs,
                                 const std::function<Tensor()>& loss_fn, double h = 1e-4) {
  return max_grad_rel_error_steps(std::move(inputs), loss_fn, {h, h * 0.1, h * 0.01});
}

}  // namespace noisesim::testutil

#endif  // NOISESIM_TESTS_TESTUTIL_GRADCHECK_HPP_
