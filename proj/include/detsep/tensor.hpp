// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_TENSOR_HPP_
#define DETSEP_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace detsep::ad {

// Dense 64-bit float tensor on a dynamic (define-by-run) tape.
//
// Ranks 0..2 are supported: {} scalar, {n} vector, {r, c} matrix. A node is
// recorded whenever any input requires grad; backward() walks the recorded
// subgraph in reverse creation order, accumulates gradients additively
// across fan-out, and then releases the graph (a loss can be backwarded
// once). Every forward op checks its output for NaN/Inf and aborts naming
// the producing op.

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;  // adds this node's grad into parents'

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  // Trainable leaf.
  static Tensor param(Shape shape, std::vector<double> values);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int64_t size() const { return static_cast<int64_t>(n_->value.size()); }
  const std::vector<double>& values() const { return n_->value; }
  std::vector<double>& mutable_values() { return n_->value; }
  bool requires_grad() const { return n_->requires_grad; }
  const std::vector<double>& grad() const;
  bool has_grad() const { return n_ && !n_->grad.empty(); }
  void zero_grad();
  double item() const;

  std::shared_ptr<Node> node() const { return n_; }
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

 private:
  std::shared_ptr<Node> n_;
};

// Factory for ops, also used by other modules to register custom
// differentiable ops (e.g. the masked synthesis op in the model layer).
// `backward` receives the finished node; it must add into parents' grads.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward);

// Reverse pass from a scalar loss. Throws on non-scalar input.
void backward(const Tensor& loss);

}  // namespace detsep::ad

#endif  // DETSEP_TENSOR_HPP_
