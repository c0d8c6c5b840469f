// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/objectives.hpp"

#include <stdexcept>

#include "detsep/ops.hpp"

namespace detsep {

using ad::Tensor;

namespace {

constexpr double kEps = 1e-8;
constexpr double kLogGuard = 1e-12;

Tensor mean_subtract(const Tensor& x) {
  return ad::sub(x, ad::broadcast_to(ad::mean(x), x.shape()));
}

Tensor pit_item(const SeparatedItem& it) {
  Tensor l_ident = ad::add(si_snr_loss(it.estimate1, it.reference1),
                           si_snr_loss(it.estimate2, it.reference2));
  Tensor l_swap = ad::add(si_snr_loss(it.estimate1, it.reference2),
                          si_snr_loss(it.estimate2, it.reference1));
  // Ties go to the identity assignment.
  return l_ident.item() <= l_swap.item() ? l_ident : l_swap;
}

Tensor pdt_item(const SeparatedItem& it) {
  if (!it.contains_keyword)
    throw std::runtime_error("PDT requires keyword item");
  return ad::add(si_snr_loss(it.estimate1, it.reference1),
                 si_snr_loss(it.estimate2, it.reference2));
}

Tensor batch_average(std::vector<Tensor> per_item) {
  if (per_item.empty()) throw std::runtime_error("loss: empty batch");
  Tensor acc = per_item[0];
  for (std::size_t i = 1; i < per_item.size(); ++i)
    acc = ad::add(acc, per_item[i]);
  return ad::scale(acc, 1.0 / static_cast<double>(per_item.size()));
}

}  // namespace

Tensor si_snr_loss(const Tensor& estimate, const Tensor& reference) {
  if (estimate.shape() != reference.shape() || estimate.shape().size() != 1)
    throw std::runtime_error("si_snr_loss: expects equal-length vectors, got " +
                             ad::shape_str(estimate.shape()) + " vs " +
                             ad::shape_str(reference.shape()));
  // Degeneracy check happens on raw values, before anything reaches the tape.
  {
    const auto& r = reference.values();
    double m = 0.0;
    for (double v : r) m += v;
    m /= static_cast<double>(r.size());
    double rr = 0.0;
    for (double v : r) rr += (v - m) * (v - m);
    if (rr <= 0.0) throw std::runtime_error("degenerate reference");
  }
  Tensor e = mean_subtract(estimate);
  Tensor r = mean_subtract(reference);
  Tensor alpha = ad::div(ad::dot(e, r), ad::dot(r, r));
  Tensor target = ad::mul(ad::broadcast_to(alpha, r.shape()), r);
  Tensor residual = ad::sub(e, target);
  Tensor num = ad::add_scalar(ad::dot(target, target), kEps);
  Tensor den = ad::add_scalar(ad::dot(residual, residual), kEps);
  return ad::scale(ad::log10_t(ad::div(num, den)), -10.0);
}

Tensor loss_pit(const SeparatedBatch& batch) {
  std::vector<Tensor> per_item;
  per_item.reserve(batch.items.size());
  for (const auto& it : batch.items) per_item.push_back(pit_item(it));
  return batch_average(std::move(per_item));
}

Tensor loss_pdt(const SeparatedBatch& batch) {
  std::vector<Tensor> per_item;
  per_item.reserve(batch.items.size());
  for (const auto& it : batch.items) per_item.push_back(pdt_item(it));
  return batch_average(std::move(per_item));
}

Tensor loss_total(const SeparatedBatch& batch, LossMode mode) {
  if (mode == LossMode::kPdtOnly) {
    for (const auto& it : batch.items)
      if (!it.contains_keyword)
        throw std::runtime_error(
            "PDT-only mode requires an all-keyword batch");
  }
  std::vector<Tensor> per_item;
  per_item.reserve(batch.items.size());
  for (const auto& it : batch.items) {
    switch (mode) {
      case LossMode::kPitOnly:
        per_item.push_back(pit_item(it));
        break;
      case LossMode::kPdtOnly:
        per_item.push_back(pdt_item(it));
        break;
      case LossMode::kPitPlusPdt:
        // The PDT term is skipped entirely for non-keyword items, so their
        // contribution is bit-identical to plain PIT.
        if (it.contains_keyword)
          per_item.push_back(ad::add(pit_item(it), pdt_item(it)));
        else
          per_item.push_back(pit_item(it));
        break;
    }
  }
  return batch_average(std::move(per_item));
}

Tensor loss_maxpool_kws(const std::vector<Tensor>& frame_posteriors,
                        const std::vector<bool>& is_positive) {
  if (frame_posteriors.size() != is_positive.size())
    throw std::runtime_error("loss_maxpool_kws: label/posterior count mismatch");
  std::vector<Tensor> per_item;
  per_item.reserve(frame_posteriors.size());
  for (std::size_t i = 0; i < frame_posteriors.size(); ++i) {
    Tensor peak = ad::row_max(frame_posteriors[i]);  // scalar
    if (is_positive[i]) {
      per_item.push_back(
          ad::scale(ad::ln_t(ad::add_scalar(peak, kLogGuard)), -1.0));
    } else {
      Tensor one_minus = ad::add_scalar(ad::scale(peak, -1.0), 1.0);
      per_item.push_back(
          ad::scale(ad::ln_t(ad::add_scalar(one_minus, kLogGuard)), -1.0));
    }
  }
  return batch_average(std::move(per_item));
}

Tensor loss_maxpool_kws(const Tensor& frame_posteriors,
                        const std::vector<bool>& is_positive) {
  const auto& s = frame_posteriors.shape();
  if (s.size() != 2)
    throw std::runtime_error("loss_maxpool_kws: expects (batch, frames), got " +
                             ad::shape_str(s));
  std::vector<Tensor> rows;
  rows.reserve(static_cast<std::size_t>(s[0]));
  for (int64_t b = 0; b < s[0]; ++b)
    rows.push_back(ad::reshape(ad::slice(frame_posteriors, 0, b, b + 1), {s[1]}));
  return loss_maxpool_kws(rows, is_positive);
}

}  // namespace detsep
