// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_EVALUATE_HPP_
#define DETSEP_EVALUATE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detsep/models.hpp"

namespace detsep {

// Detection rule: an utterance fires when score >= threshold, one event per
// utterance.
struct ThresholdResult {
  double threshold = 0.0;
  double achieved_fa_per_hour = 0.0;
  // Set when the budget forces the threshold above every negative score
  // (zero measured false alarms, no resolution below).
  bool recall_undefined_floor = false;
};

// Smallest threshold whose measured FA/h stays within target. Candidates are
// the observed negative scores and the values just above them (exact search,
// no grid); target +inf returns -inf so that everything fires.
ThresholdResult threshold_at_fa(std::vector<double> negative_scores,
                                double negative_hours,
                                double target_fa_per_hour);

enum class Selection { kMax, kCh1, kBoth };
std::string to_string(Selection s);
Selection selection_from_string(const std::string& s);

struct DatasetMetrics {
  int count = 0;
  double mean_si_snr_db = 0.0;  // best permutation, clipped per utterance
  double mean_stoi = 0.0;
  // Fraction of keyword items whose channel 1 best matches the keyword
  // reference; absent for keyword-free datasets.
  std::optional<double> determinization_rate;

  bool operator==(const DatasetMetrics&) const = default;
};

struct SelectionEval {
  double recall = 0.0;
  double threshold = 0.0;
  double achieved_fa_per_hour = 0.0;
  bool recall_undefined_floor = false;

  bool operator==(const SelectionEval&) const = default;
};

struct EvalReport {
  std::map<std::string, DatasetMetrics> datasets;  // keyed by id prefix
  std::optional<SelectionEval> max_selection;
  std::optional<SelectionEval> ch1_selection;
  double target_fa_per_hour = 0.5;
  double negative_hours = 0.0;
  int positive_count = 0;
  int negative_count = 0;
  uint64_t seed = 0;
  std::string config_hash;

  std::string to_json_text() const;
  static EvalReport from_json_text(const std::string& text);
  bool operator==(const EvalReport&) const = default;
};

// Renders the report as an aligned text table.
std::string render_report(const EvalReport& report);

// Separates every manifest item, scores the detector under the chosen
// selection (MAX scores both channels, CH1 only the preset channel),
// thresholds on the negatives at the FA/h target, and aggregates separation
// metrics and the determinization rate against the references.
EvalReport evaluate_pipeline(SeparatorModel& separator, DetectorModel& detector,
                             const std::string& manifest_path,
                             Selection selection, double target_fa_per_hour);
EvalReport evaluate_pipeline(const std::string& separator_ckpt,
                             const std::string& detector_ckpt,
                             const std::string& manifest_path,
                             Selection selection, double target_fa_per_hour);

struct FinetuneConfig {
  int epochs = 4;
  int batch_size = 16;
  double learning_rate = 3e-4;
  uint64_t seed = 3;
  double target_fa_per_hour = 0.5;
  Selection selection = Selection::kCh1;
};

struct FinetuneReport {
  double recall_before = 0.0;
  double recall_after = 0.0;
  double threshold_before = 0.0;
  double threshold_after = 0.0;
  int pool_positives = 0;
  int pool_negatives = 0;
};

// Builds the fine-tuning pool by running the separator: channel-1 outputs of
// keyword mixtures become positives, both channels of the general mixtures
// negatives. Fine-tunes from the given detector checkpoint and reports
// recall at the FA/h target before and after on the eval manifest.
FinetuneReport finetune_detector(const std::string& detector_ckpt,
                                 const std::string& separator_ckpt,
                                 const std::string& keyword_pool_manifest,
                                 const std::string& general_pool_manifest,
                                 const std::string& eval_manifest,
                                 const FinetuneConfig& config,
                                 const std::string& checkpoint_out);

// FNV-1a of a canonical string; stable across platforms.
std::string config_hash_hex(const std::string& text);

}  // namespace detsep

#endif  // DETSEP_EVALUATE_HPP_
