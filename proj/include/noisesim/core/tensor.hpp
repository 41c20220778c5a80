// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_CORE_TENSOR_HPP_
#define NOISESIM_CORE_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "noisesim/core/error.hpp"

namespace noisesim {

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

// Reverse-mode autodiff node. Values and gradients are dense row-major
// double buffers; the graph is built dynamically and freed when the last
// Tensor handle to a node goes away.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Scoped switch that disables graph construction (inference / frozen paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v, bool requires_grad = false);
  static Tensor from_vector(const Shape& s, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(const Shape& s, class Rng& rng, double stddev, bool requires_grad = false);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape.at(i); }
  int rank() const { return static_cast<int>(n_->shape.size()); }
  int64_t size() const { return static_cast<int64_t>(n_->value.size()); }

  const double* data() const { return n_->value.data(); }
  double* data() { return n_->value.data(); }
  const std::vector<double>& vec() const { return n_->value; }
  std::vector<double>& vec() { return n_->value; }
  double item() const {
    NS_CHECK(size() == 1, ShapeError, "item() on non-scalar tensor " << shape_str(shape()));
    return n_->value[0];
  }

  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool rg) { n_->requires_grad = rg; }
  const std::vector<double>& grad() const { return n_->grad; }
  void zero_grad() { n_->grad.clear(); }

  // Runs reverse-mode accumulation from this scalar.
  void backward() const;

  // A leaf copy sharing no graph history.
  Tensor detach() const;
  // Deep copy of the value into a fresh leaf.
  Tensor clone() const;

  std::shared_ptr<Node> node() const { return n_; }
  static Tensor wrap(std::shared_ptr<Node> n) {
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node> n_;
};

// Creates the result node of an op: requires_grad is inherited from parents
// and gated on grad mode; when grads are off, parents/backward are dropped.
Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn);

// Named parameter collection. std::map keeps iteration order deterministic,
// which the optimizer and the checkpoint format both rely on.
struct ParamMap {
  std::map<std::string, Tensor> params;

  void add(const std::string& name, const Tensor& t) {
    NS_CHECK(!params.count(name), ConfigError, "duplicate parameter name: " << name);
    params.emplace(name, t);
  }
  void merge(const ParamMap& other) {
    for (const auto& [k, v] : other.params) add(k, v);
  }
  void zero_grad() {
    for (auto& [k, v] : params) const_cast<Tensor&>(v).zero_grad();
  }
  void set_requires_grad(bool rg) {
    for (auto& [k, v] : params) const_cast<Tensor&>(v).set_requires_grad(rg);
  }
  int64_t total_size() const {
    int64_t n = 0;
    for (const auto& [k, v] : params) n += v.size();
    return n;
  }
};

}  // namespace noisesim

#endif  // NOISESIM_CORE_TENSOR_HPP_
