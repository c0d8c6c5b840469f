// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "detsep/manifest.hpp"
#include "detsep/metrics.hpp"
#include "detsep/training.hpp"

namespace detsep {

namespace {
using ordered_json = nlohmann::ordered_json;
}

ThresholdResult threshold_at_fa(std::vector<double> negative_scores,
                                double negative_hours,
                                double target_fa_per_hour) {
  if (negative_hours <= 0.0)
    throw std::runtime_error("threshold_at_fa: negative_hours must be > 0");
  ThresholdResult result;
  if (negative_scores.empty()) {
    result.threshold = -std::numeric_limits<double>::infinity();
    return result;
  }
  std::sort(negative_scores.begin(), negative_scores.end());
  auto fa_at = [&](double t) {
    const auto firing = negative_scores.end() -
                        std::lower_bound(negative_scores.begin(),
                                         negative_scores.end(), t);
    return static_cast<double>(firing) / negative_hours;
  };

  if (fa_at(-std::numeric_limits<double>::infinity()) <= target_fa_per_hour) {
    result.threshold = -std::numeric_limits<double>::infinity();
    result.achieved_fa_per_hour = fa_at(result.threshold);
    return result;
  }

  // Candidates: each observed score and the value just above it, ascending.
  std::vector<double> candidates;
  candidates.reserve(negative_scores.size() * 2);
  for (double s : negative_scores) {
    candidates.push_back(s);
    candidates.push_back(std::nextafter(s, std::numeric_limits<double>::max()));
  }
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    if (fa_at(t) <= target_fa_per_hour) {
      result.threshold = t;
      result.achieved_fa_per_hour = fa_at(t);
      result.recall_undefined_floor = t > negative_scores.back();
      return result;
    }
  }
  // Unreachable in exact arithmetic; keep the sentinel path anyway.
  result.threshold = std::nextafter(negative_scores.back(),
                                    std::numeric_limits<double>::max());
  result.achieved_fa_per_hour = 0.0;
  result.recall_undefined_floor = true;
  return result;
}

std::string to_string(Selection s) {
  switch (s) {
    case Selection::kMax: return "max";
    case Selection::kCh1: return "ch1";
    case Selection::kBoth: return "both";
  }
  return "both";
}

Selection selection_from_string(const std::string& s) {
  if (s == "max") return Selection::kMax;
  if (s == "ch1") return Selection::kCh1;
  if (s == "both") return Selection::kBoth;
  throw std::runtime_error("unknown selection: " + s);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

// JSON has no +-inf literal; the infinite-threshold sentinels go through as
// strings.
ordered_json threshold_to_json(double t) {
  if (std::isfinite(t)) return t;
  return t > 0 ? "inf" : "-inf";
}

double threshold_from_json(const ordered_json& j) {
  if (j.is_string())
    return j.get<std::string>() == "inf"
               ? std::numeric_limits<double>::infinity()
               : -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

ordered_json selection_to_json(const SelectionEval& s) {
  ordered_json j;
  j["recall"] = s.recall;
  j["threshold"] = threshold_to_json(s.threshold);
  j["achieved_fa_per_hour"] = s.achieved_fa_per_hour;
  j["recall_undefined_floor"] = s.recall_undefined_floor;
  return j;
}

SelectionEval selection_from_json(const ordered_json& j) {
  SelectionEval s;
  s.recall = j.at("recall").get<double>();
  s.threshold = threshold_from_json(j.at("threshold"));
  s.achieved_fa_per_hour = j.at("achieved_fa_per_hour").get<double>();
  s.recall_undefined_floor = j.at("recall_undefined_floor").get<bool>();
  return s;
}

}  // namespace

std::string EvalReport::to_json_text() const {
  ordered_json j;
  ordered_json ds;
  for (const auto& [name, m] : datasets) {
    ordered_json d;
    d["count"] = m.count;
    d["mean_si_snr_db"] = m.mean_si_snr_db;
    d["mean_stoi"] = m.mean_stoi;
    d["determinization_rate"] = m.determinization_rate
                                    ? ordered_json(*m.determinization_rate)
                                    : ordered_json();
    ds[name] = d;
  }
  j["datasets"] = ds;
  j["max_selection"] =
      max_selection ? selection_to_json(*max_selection) : ordered_json();
  j["ch1_selection"] =
      ch1_selection ? selection_to_json(*ch1_selection) : ordered_json();
  j["target_fa_per_hour"] = target_fa_per_hour;
  j["negative_hours"] = negative_hours;
  j["positive_count"] = positive_count;
  j["negative_count"] = negative_count;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump(2);
}

EvalReport EvalReport::from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  EvalReport r;
  for (const auto& [name, d] : j.at("datasets").items()) {
    DatasetMetrics m;
    m.count = d.at("count").get<int>();
    m.mean_si_snr_db = d.at("mean_si_snr_db").get<double>();
    m.mean_stoi = d.at("mean_stoi").get<double>();
    if (!d.at("determinization_rate").is_null())
      m.determinization_rate = d.at("determinization_rate").get<double>();
    r.datasets[name] = m;
  }
  if (!j.at("max_selection").is_null())
    r.max_selection = selection_from_json(j.at("max_selection"));
  if (!j.at("ch1_selection").is_null())
    r.ch1_selection = selection_from_json(j.at("ch1_selection"));
  r.target_fa_per_hour = j.at("target_fa_per_hour").get<double>();
  r.negative_hours = j.at("negative_hours").get<double>();
  r.positive_count = j.at("positive_count").get<int>();
  r.negative_count = j.at("negative_count").get<int>();
  r.seed = j.at("seed").get<uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

std::string render_report(const EvalReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << "dataset      count  si_snr_db     stoi  determinization\n";
  for (const auto& [name, m] : report.datasets) {
    os << name;
    for (std::size_t i = name.size(); i < 12; ++i) os << ' ';
    os.width(6);
    os << m.count;
    os.width(11);
    os << m.mean_si_snr_db;
    os.width(9);
    os << m.mean_stoi;
    os.width(17);
    if (m.determinization_rate)
      os << *m.determinization_rate;
    else
      os << "-";
    os << "\n";
  }
  os << "\n";
  os << "negatives: " << report.negative_count << " (" << report.negative_hours
     << " h), positives: " << report.positive_count
     << ", target FA/h: " << report.target_fa_per_hour << "\n";
  auto line = [&](const char* name, const std::optional<SelectionEval>& s) {
    if (!s) return;
    os << name << "  recall " << s->recall << "  threshold " << s->threshold
       << "  achieved FA/h " << s->achieved_fa_per_hour;
    if (s->recall_undefined_floor) os << "  [recall floor undefined]";
    os << "\n";
  };
  line("MAX", report.max_selection);
  line("CH1", report.ch1_selection);
  return os.str();
}

// ---------------------------------------------------------------------------
// Pipeline evaluation
// ---------------------------------------------------------------------------

namespace {

struct DatasetAccum {
  int count = 0;
  double si_snr_sum = 0.0;
  double stoi_sum = 0.0;
  int stoi_count = 0;
  int keyword_count = 0;
  int determinized = 0;
};

std::string dataset_key(const std::string& id) {
  const auto pos = id.find('_');
  return pos == std::string::npos ? id : id.substr(0, pos);
}

}  // namespace

EvalReport evaluate_pipeline(SeparatorModel& separator, DetectorModel& detector,
                             const std::string& manifest_path,
                             Selection selection, double target_fa_per_hour) {
  const auto entries = read_manifest(manifest_path);
  if (entries.empty())
    throw std::runtime_error("empty manifest: " + manifest_path);
  const std::optional<ConditionClue> clue =
      separator.conditioned()
          ? std::optional<ConditionClue>(make_clue(separator.config()))
          : std::nullopt;

  std::map<std::string, DatasetAccum> accum;
  std::vector<double> pos_max, pos_ch1, neg_max, neg_ch1;
  double negative_hours = 0.0;

  for (const auto& e : entries) {
    const Waveform mixture =
        read_wav(resolve_manifest_path(manifest_path, e.mixture_path));
    auto [ch1, ch2] = separate(mixture, clue, separator);

    double score_ch1 = 0.0, score_max = 0.0;
    if (selection == Selection::kCh1) {
      score_ch1 = detect(ch1, detector).score;
    } else if (selection == Selection::kMax) {
      score_max = std::max(detect(ch1, detector).score,
                           detect(ch2, detector).score);
    } else {
      score_ch1 = detect(ch1, detector).score;
      score_max = std::max(score_ch1, detect(ch2, detector).score);
    }
    if (e.contains_keyword) {
      pos_ch1.push_back(score_ch1);
      pos_max.push_back(score_max);
    } else {
      neg_ch1.push_back(score_ch1);
      neg_max.push_back(score_max);
      negative_hours += e.duration_seconds / 3600.0;
    }

    auto& a = accum[dataset_key(e.id)];
    a.count += 1;
    if (e.ref_b_path) {
      const Waveform ref_a =
          read_wav(resolve_manifest_path(manifest_path, e.ref_a_path));
      const Waveform ref_b =
          read_wav(resolve_manifest_path(manifest_path, *e.ref_b_path));
      const auto perm = best_permutation({ch1, ch2}, {ref_a, ref_b});
      for (double v : perm.per_channel_si_snr_db)
        a.si_snr_sum += std::clamp(v, -30.0, 30.0) / 2.0;
      const std::vector<const Waveform*> refs{&ref_a, &ref_b};
      for (int c = 0; c < 2; ++c) {
        const Waveform& est = c == 0 ? ch1 : ch2;
        const Waveform& ref =
            *refs[static_cast<std::size_t>(perm.permutation[c])];
        try {
          a.stoi_sum += stoi(est, ref);
          a.stoi_count += 1;
        } catch (const std::runtime_error&) {
          // Too few active frames for this pairing; skip it in the average.
        }
      }
      if (e.contains_keyword) {
        a.keyword_count += 1;
        if (si_snr(ch1, ref_a) >= si_snr(ch2, ref_a)) a.determinized += 1;
      }
    }
  }

  EvalReport report;
  report.target_fa_per_hour = target_fa_per_hour;
  report.negative_hours = negative_hours;
  report.positive_count = static_cast<int>(pos_ch1.size());
  report.negative_count = static_cast<int>(neg_ch1.size());
  report.seed = separator.config().init_seed;
  report.config_hash = config_hash_hex(
      manifest_path + "|" + to_string(selection) + "|" +
      std::to_string(target_fa_per_hour) + "|" + separator.to_checkpoint().meta_json +
      "|" + detector.to_checkpoint().meta_json);

  for (const auto& [name, a] : accum) {
    DatasetMetrics m;
    m.count = a.count;
    m.mean_si_snr_db = a.count ? a.si_snr_sum / a.count : 0.0;
    m.mean_stoi = a.stoi_count ? a.stoi_sum / a.stoi_count : 0.0;
    if (a.keyword_count > 0)
      m.determinization_rate =
          static_cast<double>(a.determinized) / a.keyword_count;
    report.datasets[name] = m;
  }

  auto eval_selection = [&](const std::vector<double>& neg,
                            const std::vector<double>& pos) {
    SelectionEval s;
    auto th = threshold_at_fa(neg, negative_hours, target_fa_per_hour);
    s.threshold = th.threshold;
    s.achieved_fa_per_hour = th.achieved_fa_per_hour;
    s.recall_undefined_floor = th.recall_undefined_floor;
    int hits = 0;
    for (double p : pos)
      if (p >= th.threshold) ++hits;
    s.recall = pos.empty() ? 0.0 : static_cast<double>(hits) / pos.size();
    return s;
  };
  if (selection == Selection::kMax || selection == Selection::kBoth)
    report.max_selection = eval_selection(neg_max, pos_max);
  if (selection == Selection::kCh1 || selection == Selection::kBoth)
    report.ch1_selection = eval_selection(neg_ch1, pos_ch1);
  return report;
}

EvalReport evaluate_pipeline(const std::string& separator_ckpt,
                             const std::string& detector_ckpt,
                             const std::string& manifest_path,
                             Selection selection, double target_fa_per_hour) {
  SeparatorModel separator =
      SeparatorModel::from_checkpoint(load_checkpoint(separator_ckpt));
  DetectorModel detector =
      DetectorModel::from_checkpoint(load_checkpoint(detector_ckpt));
  return evaluate_pipeline(separator, detector, manifest_path, selection,
                           target_fa_per_hour);
}

// ---------------------------------------------------------------------------
// Fine-tuning on separated data
// ---------------------------------------------------------------------------

FinetuneReport finetune_detector(const std::string& detector_ckpt,
                                 const std::string& separator_ckpt,
                                 const std::string& keyword_pool_manifest,
                                 const std::string& general_pool_manifest,
                                 const std::string& eval_manifest,
                                 const FinetuneConfig& config,
                                 const std::string& checkpoint_out) {
  SeparatorModel separator =
      SeparatorModel::from_checkpoint(load_checkpoint(separator_ckpt));
  DetectorModel detector =
      DetectorModel::from_checkpoint(load_checkpoint(detector_ckpt));
  const std::optional<ConditionClue> clue =
      separator.conditioned()
          ? std::optional<ConditionClue>(make_clue(separator.config()))
          : std::nullopt;

  FinetuneReport report;
  {
    auto before = evaluate_pipeline(separator, detector, eval_manifest,
                                    config.selection, config.target_fa_per_hour);
    const auto& s = config.selection == Selection::kMax
                        ? before.max_selection
                        : before.ch1_selection;
    report.recall_before = s->recall;
    report.threshold_before = s->threshold;
  }

  // Pool: channel-1 outputs of the keyword mixtures as positives (the preset
  // keyword channel is trusted), both channels of general mixtures as
  // negatives.
  std::vector<LabeledAudio> pool;
  for (const auto& e : read_manifest(keyword_pool_manifest)) {
    if (!e.contains_keyword)
      throw std::runtime_error("fine-tune keyword pool has non-keyword item " +
                               e.id);
    const Waveform mixture = read_wav(
        resolve_manifest_path(keyword_pool_manifest, e.mixture_path));
    auto [ch1, ch2] = separate(mixture, clue, separator);
    pool.push_back({std::move(ch1), true});
    report.pool_positives += 1;
  }
  for (const auto& e : read_manifest(general_pool_manifest)) {
    if (e.contains_keyword) continue;
    const Waveform mixture = read_wav(
        resolve_manifest_path(general_pool_manifest, e.mixture_path));
    auto [ch1, ch2] = separate(mixture, clue, separator);
    pool.push_back({std::move(ch1), false});
    pool.push_back({std::move(ch2), false});
    report.pool_negatives += 2;
  }

  fit_detector(detector, pool, {}, config.epochs, config.batch_size,
               config.learning_rate, config.seed);

  {
    auto after = evaluate_pipeline(separator, detector, eval_manifest,
                                   config.selection, config.target_fa_per_hour);
    const auto& s = config.selection == Selection::kMax ? after.max_selection
                                                        : after.ch1_selection;
    report.recall_after = s->recall;
    report.threshold_after = s->threshold;
  }
  if (!checkpoint_out.empty())
    save_checkpoint(checkpoint_out, detector.to_checkpoint());
  return report;
}

std::string config_hash_hex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detsep
