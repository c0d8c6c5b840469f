// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_OPTIM_HPP_
#define DETSEP_OPTIM_HPP_

#include <vector>

#include "detsep/tensor.hpp"

namespace detsep::ad {

// Plain SGD step; every parameter must have a populated gradient.
void sgd_step(std::vector<Tensor>& params, double lr);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step_count = 0;
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
};

// Adam with bias correction. State accumulators are allocated lazily to the
// parameter shapes on the first step.
void adam_step(std::vector<Tensor>& params, AdamState& state);

void zero_grads(std::vector<Tensor>& params);

}  // namespace detsep::ad

#endif  // DETSEP_OPTIM_HPP_
