// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_OBJECTIVES_HPP_
#define DETSEP_OBJECTIVES_HPP_

#include <vector>

#include "detsep/tensor.hpp"

namespace detsep {

// One separated two-channel utterance on the tape. By corpus convention,
// reference channel 1 is the keyword-bearing source whenever
// contains_keyword is set.
struct SeparatedItem {
  ad::Tensor estimate1, estimate2;    // {samples}
  ad::Tensor reference1, reference2;  // {samples}
  bool contains_keyword = false;
};

struct SeparatedBatch {
  std::vector<SeparatedItem> items;
};

enum class LossMode { kPitOnly, kPdtOnly, kPitPlusPdt };

// Negative SI-SNR, unclipped and differentiable. Forward value matches
// -metrics::si_snr (pre-clip) to well under 1e-9.
ad::Tensor si_snr_loss(const ad::Tensor& estimate, const ad::Tensor& reference);

// Permutation-invariant loss: per item the minimum over both channel
// assignments of the summed si_snr_loss, batch-averaged. Gradient flows only
// through the winning permutation; ties go to the identity.
ad::Tensor loss_pit(const SeparatedBatch& batch);

// Determinized loss: the identity assignment only (channel 1 must carry the
// keyword source). Every item must have contains_keyword set.
ad::Tensor loss_pdt(const SeparatedBatch& batch);

// Combined criterion: per item PIT plus, for keyword items, the PDT term.
// kPitOnly drops the PDT term regardless of the flags; kPdtOnly drops PIT
// and requires an all-keyword batch.
ad::Tensor loss_total(const SeparatedBatch& batch,
                      LossMode mode = LossMode::kPitPlusPdt);

// Max-pooling detector loss over per-frame posteriors in (0, 1): positives
// pay -ln(max posterior), negatives -ln(1 - max posterior), batch-averaged.
// Gradient reaches only the argmax frame (ties to the lowest index).
ad::Tensor loss_maxpool_kws(const std::vector<ad::Tensor>& frame_posteriors,
                            const std::vector<bool>& is_positive);
// Matrix form, one utterance per row.
ad::Tensor loss_maxpool_kws(const ad::Tensor& frame_posteriors,
                            const std::vector<bool>& is_positive);

}  // namespace detsep

#endif  // DETSEP_OBJECTIVES_HPP_
