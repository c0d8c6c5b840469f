// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_OPS_HPP_
#define DETSEP_OPS_HPP_

#include <functional>
#include <vector>

#include "detsep/tensor.hpp"

namespace detsep::ad {

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Scalar conveniences.
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// (r,k)x(k,c) -> (r,c), or (r,k)x(k) -> (r).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
// Natural log / log10; inputs must be strictly positive (callers guard with
// an epsilon-add).
Tensor ln_t(const Tensor& a);
Tensor log10_t(const Tensor& a);

// Softmax over the last axis (each row of a matrix, or a whole vector).
Tensor softmax(const Tensor& a);

// axis 0 stacks rows (vectors must share length); axis 1 concatenates
// columns of matrices with equal row count.
Tensor concat(int axis, const std::vector<Tensor>& parts);
// Half-open [start, stop) along `axis`.
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t stop);
Tensor transpose(const Tensor& a);
// {} -> any shape, {c} -> {r,c} (row replication).
Tensor broadcast_to(const Tensor& a, Shape shape);
Tensor reshape(const Tensor& a, Shape shape);

// Max over the last axis; gradient is routed to the argmax element only,
// ties broken toward the lowest index.
Tensor row_max(const Tensor& a);

// Max over coordinate-wise |analytic - numeric| / max(1, |analytic|,
// |numeric|) between backward() gradients and central finite differences
// (step h) for a scalar-valued function of one point tensor.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& point, double h = 1e-5);

}  // namespace detsep::ad

#endif  // DETSEP_OPS_HPP_
