// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace detsep::ad {

namespace {
std::atomic<uint64_t> g_next_id{1};
}

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

static void check_finite(const char* op, const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("non-finite value produced by op '") +
                               op + "'");
  }
}

static std::shared_ptr<Node> new_node(const char* op, Shape shape,
                                      std::vector<double> value) {
  if (numel(shape) != static_cast<int64_t>(value.size()))
    throw std::runtime_error(std::string(op) + ": value size " +
                             std::to_string(value.size()) +
                             " does not match shape " + shape_str(shape));
  check_finite(op, value);
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(new_node("leaf", std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double v) { return constant({}, {v}); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)), 0.0);
  auto n = new_node("leaf", std::move(shape), std::move(v));
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
  auto n = new_node("leaf", std::move(shape), std::move(values));
  n->requires_grad = true;
  return Tensor(n);
}

const std::vector<double>& Tensor::grad() const {
  if (!n_ || n_->grad.empty())
    throw std::runtime_error("tensor has no gradient (missing backward?)");
  return n_->grad;
}

void Tensor::zero_grad() {
  if (n_) n_->grad.assign(n_->value.size(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw std::runtime_error("item(): tensor is not scalar");
  return n_->value[0];
}

Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward) {
  auto n = new_node(op, std::move(shape), std::move(value));
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    Node* raw = n.get();
    n->backward = [raw, fn = std::move(backward)]() { fn(*raw); };
  }
  return Tensor(n);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::runtime_error("backward: loss must be a defined scalar");
  if (!loss.requires_grad())
    throw std::runtime_error("backward: loss is not connected to any parameter");

  // Collect the reachable subgraph; creation ids give a topological order.
  // Shared pointers pin every node for the duration of the pass (releasing a
  // node's parent list must not free nodes still to be visited).
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  order.push_back(loss.node());
  seen.insert(loss.node().get());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& p : order[i]->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) order.push_back(p);
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });

  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (const auto& n : order) {
    if (n->backward && !n->grad.empty()) n->backward();
  }
  // Release the recorded graph; leaf gradients stay in place.
  for (const auto& n : order) {
    if (!n->parents.empty()) {
      n->backward = nullptr;
      n->parents.clear();
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

}  // namespace detsep::ad
