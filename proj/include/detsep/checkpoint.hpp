// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_CHECKPOINT_HPP_
#define DETSEP_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include "detsep/tensor.hpp"

namespace detsep {

// Binary parameter container: magic, version, a JSON metadata string (model
// hyperparameters), then named tensors as shape + raw little-endian doubles.
// Round-trips are bit-exact.
struct Checkpoint {
  int version = 1;
  std::string meta_json;  // model kind + hyperparameters
  std::vector<std::pair<std::string, ad::Tensor>> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace detsep

#endif  // DETSEP_CHECKPOINT_HPP_
