// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/core/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "noisesim/core/rng.hpp"

namespace noisesim {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value.assign(static_cast<size_t>(numel(s)), 0.0);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
  Tensor t = zeros(s, requires_grad);
  for (auto& x : t.vec()) x = v;
  return t;
}

Tensor Tensor::from_vector(const Shape& s, std::vector<double> data, bool requires_grad) {
  NS_CHECK(static_cast<int64_t>(data.size()) == numel(s), ShapeError,
           "from_vector: " << data.size() << " values for shape " << shape_str(s));
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return full({1}, v, requires_grad); }

Tensor Tensor::randn(const Shape& s, Rng& rng, double stddev, bool requires_grad) {
  Tensor t = zeros(s, requires_grad);
  for (auto& x : t.vec()) x = stddev * rng.normal();
  return t;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = n_->shape;
  n->value = n_->value;
  n->requires_grad = false;
  return wrap(std::move(n));
}

Tensor Tensor::clone() const {
  auto n = std::make_shared<Node>();
  n->shape = n_->shape;
  n->value = n_->value;
  n->requires_grad = n_->requires_grad;
  return wrap(std::move(n));
}

void Tensor::backward() const {
  NS_CHECK(defined() && size() == 1, ShapeError, "backward() requires a scalar loss");
  NS_CHECK(n_->requires_grad, ConfigError, "backward() on a tensor with no graph");

  // Iterative post-order DFS over grad-requiring parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({n_.get(), 0});
  visited.insert(n_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  n_->ensure_grad();
  n_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) {
      node->ensure_grad();
      node->backward_fn(*node);
    }
  }
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  NS_CHECK(static_cast<int64_t>(value.size()) == numel(shape), ShapeError,
           "op produced " << value.size() << " values for shape " << shape_str(shape));
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool rg = false;
  if (grad_enabled()) {
    for (const auto& p : parents) {
      if (p.defined() && p.node()->requires_grad) rg = true;
    }
  }
  n->requires_grad = rg;
  if (rg) {
    for (const auto& p : parents) {
      if (p.defined()) n->parents.push_back(p.node());
    }
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor::wrap(std::move(n));
}

}  // namespace noisesim
