// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace detsep::ad {

namespace {
void require_grads(const std::vector<Tensor>& params) {
  for (const auto& p : params)
    if (!p.has_grad())
      throw std::runtime_error("optimizer: parameter is missing its gradient");
}
}  // namespace

void sgd_step(std::vector<Tensor>& params, double lr) {
  require_grads(params);
  for (auto& p : params) {
    auto& v = p.mutable_values();
    const auto& g = p.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  require_grads(params);
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values().size(), 0.0);
      state.v.emplace_back(p.values().size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw std::runtime_error("optimizer: state/parameter count mismatch");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& val = params[pi].mutable_values();
    const auto& g = params[pi].grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    if (m.size() != val.size())
      throw std::runtime_error("optimizer: accumulator shape mismatch");
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      val[i] -= state.lr * mh / (std::sqrt(vh) + state.epsilon);
    }
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace detsep::ad
