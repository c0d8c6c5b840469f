// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "detsep/manifest.hpp"
#include "detsep/metrics.hpp"
#include "detsep/objectives.hpp"
#include "detsep/ops.hpp"
#include "detsep/optim.hpp"
#include "detsep/rng.hpp"

namespace detsep {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr int kEarlyStopPatience = 10;

struct SepItem {
  Waveform mixture, ref_a, ref_b;
  bool contains_keyword = false;
};

std::vector<SepItem> load_separation_items(const std::string& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  std::vector<SepItem> items;
  items.reserve(entries.size());
  for (const auto& e : entries) {
    if (!e.ref_b_path)
      throw std::runtime_error("manifest entry " + e.id +
                               " is not a two-source mixture");
    SepItem it;
    it.mixture = read_wav(resolve_manifest_path(manifest_path, e.mixture_path));
    it.ref_a = read_wav(resolve_manifest_path(manifest_path, e.ref_a_path));
    it.ref_b = read_wav(resolve_manifest_path(manifest_path, *e.ref_b_path));
    it.contains_keyword = e.contains_keyword;
    items.push_back(std::move(it));
  }
  if (items.empty())
    throw std::runtime_error("empty manifest: " + manifest_path);
  return items;
}

std::vector<double> snapshot(const std::vector<Tensor>& params) {
  std::vector<double> flat;
  for (const auto& p : params)
    flat.insert(flat.end(), p.values().begin(), p.values().end());
  return flat;
}

void restore(std::vector<Tensor>& params, const std::vector<double>& flat) {
  std::size_t off = 0;
  for (auto& p : params) {
    auto& v = p.mutable_values();
    std::copy(flat.begin() + off, flat.begin() + off + v.size(), v.begin());
    off += v.size();
  }
}

LossMode to_loss_mode(TrainMode m) {
  switch (m) {
    case TrainMode::kPitOnly: return LossMode::kPitOnly;
    case TrainMode::kPdtOnly: return LossMode::kPdtOnly;
    case TrainMode::kPitPlusPdt: return LossMode::kPitPlusPdt;
    case TrainMode::kSe: break;
  }
  throw std::runtime_error("se mode has no separation loss mode");
}

}  // namespace

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kPitOnly: return "pit_only";
    case TrainMode::kPdtOnly: return "pdt_only";
    case TrainMode::kPitPlusPdt: return "pit_plus_pdt";
    case TrainMode::kSe: return "se";
  }
  return "pit_plus_pdt";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "pit_only") return TrainMode::kPitOnly;
  if (s == "pdt_only") return TrainMode::kPdtOnly;
  if (s == "pit_plus_pdt") return TrainMode::kPitPlusPdt;
  if (s == "se") return TrainMode::kSe;
  throw std::runtime_error("unknown train mode: " + s);
}

SeparatorTrainConfig SeparatorTrainConfig::from_json_text(
    const std::string& text) {
  json j = json::parse(text);
  SeparatorTrainConfig c;
  c.mode = train_mode_from_string(j.value("mode", to_string(c.mode)));
  c.fusion = fusion_from_string(j.value("fusion", "none"));
  c.composition = composition_from_string(j.value("composition", "none"));
  c.text_id = j.value("text_id", c.text_id);
  c.audio_clips = j.value("audio_clips", c.audio_clips);
  c.clue_seed = j.value("clue_seed", c.clue_seed);
  c.cond_dim = j.value("cond_dim", c.cond_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.train_manifest = j.value("train_manifest", "");
  c.dev_manifest = j.value("dev_manifest", "");
  c.checkpoint_out = j.value("checkpoint_out", "");
  c.log_out = j.value("log_out", "");
  return c;
}

SeparatorTrainConfig SeparatorTrainConfig::from_json_file(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

DetectorTrainConfig DetectorTrainConfig::from_json_text(
    const std::string& text) {
  json j = json::parse(text);
  DetectorTrainConfig c;
  c.channels = j.value("channels", c.channels);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.train_manifest = j.value("train_manifest", "");
  c.dev_manifest = j.value("dev_manifest", "");
  c.checkpoint_out = j.value("checkpoint_out", "");
  c.log_out = j.value("log_out", "");
  return c;
}

DetectorTrainConfig DetectorTrainConfig::from_json_file(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void write_log_csv(const std::string& path, const std::vector<EpochRow>& log,
                   const std::string& metric_name) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write log: " + path);
  os << "epoch,train_loss,dev_loss," << metric_name << "\n";
  os.precision(10);
  for (const auto& r : log)
    os << r.epoch << "," << r.train_loss << "," << r.dev_loss << ","
       << r.dev_metric << "\n";
}

TrainResult train_separator(const SeparatorTrainConfig& config) {
  auto train = load_separation_items(config.train_manifest);
  auto dev = config.dev_manifest.empty()
                 ? std::vector<SepItem>{}
                 : load_separation_items(config.dev_manifest);
  if (dev.empty()) dev = train;

  const bool needs_all_keyword =
      config.mode == TrainMode::kPdtOnly || config.mode == TrainMode::kSe;
  if (needs_all_keyword) {
    for (const auto& it : train)
      if (!it.contains_keyword)
        throw std::runtime_error(to_string(config.mode) +
                                 " mode requires an all-keyword manifest");
  }

  SeparatorConfig mc;
  mc.sample_rate_hz = train[0].mixture.sample_rate_hz;
  mc.cond_dim = config.cond_dim;
  mc.hidden = config.hidden;
  mc.layers = config.layers;
  mc.channels = config.mode == TrainMode::kSe ? 1 : 2;
  mc.fusion = config.fusion;
  mc.composition = config.composition;
  mc.text_id = config.text_id;
  mc.audio_clips = config.audio_clips;
  mc.clue_seed = config.clue_seed;
  mc.init_seed = config.seed;
  SeparatorModel model(mc);
  const std::optional<ConditionClue> clue =
      model.conditioned() ? std::optional<ConditionClue>(make_clue(mc))
                          : std::nullopt;

  auto params = model.param_list();
  ad::AdamState adam;
  adam.lr = config.learning_rate;
  Rng shuffle_rng(config.seed ^ 0x5EED5EEDull);

  auto item_loss = [&](const SepItem& it, bool inference) -> Tensor {
    auto est = model.forward(it.mixture, clue, inference);
    const int64_t n = static_cast<int64_t>(it.mixture.samples.size());
    Tensor ref_a = Tensor::constant({n}, it.ref_a.samples);
    if (config.mode == TrainMode::kSe)
      return si_snr_loss(est[0], ref_a);
    SeparatedBatch batch;
    SeparatedItem si;
    si.estimate1 = est[0];
    si.estimate2 = est[1];
    si.reference1 = ref_a;
    si.reference2 = Tensor::constant({n}, it.ref_b.samples);
    si.contains_keyword = it.contains_keyword;
    batch.items.push_back(std::move(si));
    return loss_total(batch, to_loss_mode(config.mode));
  };

  auto dev_si_snr = [&](const SepItem& it) -> double {
    auto est = model.forward(it.mixture, clue, /*inference=*/false);
    Waveform e1{est[0].values(), it.mixture.sample_rate_hz};
    if (config.mode == TrainMode::kSe) return si_snr_clipped(e1, it.ref_a);
    Waveform e2{est[1].values(), it.mixture.sample_rate_hz};
    auto perm = best_permutation({e1, e2}, {it.ref_a, it.ref_b});
    double acc = 0.0;
    for (double v : perm.per_channel_si_snr_db)
      acc += std::clamp(v, -30.0, 30.0);
    return acc / static_cast<double>(perm.per_channel_si_snr_db.size());
  };

  TrainResult result;
  result.best_dev_loss = 1e300;
  std::vector<double> best_params = snapshot(params);
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Fisher-Yates on the item order, seeded.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

    double train_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + config.batch_size);
      Tensor acc;
      for (std::size_t i = start; i < stop; ++i) {
        Tensor l = item_loss(train[order[i]], false);
        acc = acc.defined() ? ad::add(acc, l) : l;
      }
      Tensor loss = ad::scale(acc, 1.0 / static_cast<double>(stop - start));
      ad::zero_grads(params);
      ad::backward(loss);
      ad::adam_step(params, adam);
      train_loss += loss.item();
      batches += 1;
    }
    train_loss /= static_cast<double>(batches);

    double dev_loss = 0.0, dev_metric = 0.0;
    for (const auto& it : dev) {
      dev_loss += item_loss(it, false).item();
      dev_metric += dev_si_snr(it);
    }
    dev_loss /= static_cast<double>(dev.size());
    dev_metric /= static_cast<double>(dev.size());

    result.log.push_back({epoch, train_loss, dev_loss, dev_metric});
    if (dev_loss < result.best_dev_loss) {
      result.best_dev_loss = dev_loss;
      result.best_epoch = epoch;
      best_params = snapshot(params);
      since_best = 0;
    } else if (++since_best >= kEarlyStopPatience) {
      break;
    }
  }

  restore(params, best_params);
  if (!config.checkpoint_out.empty()) {
    save_checkpoint(config.checkpoint_out, model.to_checkpoint());
    result.checkpoint_path = config.checkpoint_out;
  }
  write_log_csv(config.log_out, result.log, "dev_si_snr");
  return result;
}

double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty())
    throw std::runtime_error("auc: both classes required");
  double wins = 0.0;
  for (double p : positive_scores)
    for (double n : negative_scores) {
      if (p > n)
        wins += 1.0;
      else if (p == n)
        wins += 0.5;
    }
  return wins / (static_cast<double>(positive_scores.size()) *
                 static_cast<double>(negative_scores.size()));
}

std::vector<EpochRow> fit_detector(DetectorModel& model,
                                   const std::vector<LabeledAudio>& train,
                                   const std::vector<LabeledAudio>& dev_in,
                                   int epochs, int batch_size, double lr,
                                   uint64_t seed) {
  const auto& dev = dev_in.empty() ? train : dev_in;
  bool any_pos = false, any_neg = false;
  for (const auto& it : train) (it.positive ? any_pos : any_neg) = true;
  if (!any_pos) throw std::runtime_error("missing positive class");
  if (!any_neg) throw std::runtime_error("missing negative class");

  auto params = model.param_list();
  ad::AdamState adam;
  adam.lr = lr;
  Rng shuffle_rng(seed ^ 0xDE7EC7ull);

  std::vector<EpochRow> log;
  std::vector<double> best = snapshot(params);
  double best_dev = 1e300;
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

    double train_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      std::vector<Tensor> rows;
      std::vector<bool> labels;
      for (std::size_t i = start; i < stop; ++i) {
        rows.push_back(model.forward(train[order[i]].audio));
        labels.push_back(train[order[i]].positive);
      }
      Tensor loss = loss_maxpool_kws(rows, labels);
      ad::zero_grads(params);
      ad::backward(loss);
      ad::adam_step(params, adam);
      train_loss += loss.item();
      batches += 1;
    }
    train_loss /= static_cast<double>(batches);

    double dev_loss = 0.0;
    std::vector<double> pos_scores, neg_scores;
    for (const auto& it : dev) {
      Tensor post = model.forward(it.audio);
      dev_loss +=
          loss_maxpool_kws(std::vector<Tensor>{post}, {it.positive}).item();
      const double score =
          *std::max_element(post.values().begin(), post.values().end());
      (it.positive ? pos_scores : neg_scores).push_back(score);
    }
    dev_loss /= static_cast<double>(dev.size());
    const double dev_auc =
        (pos_scores.empty() || neg_scores.empty()) ? 0.0
                                                   : auc(pos_scores, neg_scores);

    log.push_back({epoch, train_loss, dev_loss, dev_auc});
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      best = snapshot(params);
      since_best = 0;
    } else if (++since_best >= kEarlyStopPatience) {
      break;
    }
  }
  restore(params, best);
  return log;
}

TrainResult train_detector(const DetectorTrainConfig& config) {
  auto load = [](const std::string& manifest_path) {
    std::vector<LabeledAudio> items;
    for (const auto& e : read_manifest(manifest_path)) {
      LabeledAudio it;
      it.audio = read_wav(resolve_manifest_path(manifest_path, e.mixture_path));
      it.positive = e.contains_keyword;
      items.push_back(std::move(it));
    }
    if (items.empty())
      throw std::runtime_error("empty manifest: " + manifest_path);
    return items;
  };
  auto train = load(config.train_manifest);
  auto dev = config.dev_manifest.empty() ? std::vector<LabeledAudio>{}
                                         : load(config.dev_manifest);

  DetectorConfig mc;
  mc.sample_rate_hz = train[0].audio.sample_rate_hz;
  mc.channels = config.channels;
  mc.init_seed = config.seed;
  DetectorModel model(mc);

  TrainResult result;
  result.log = fit_detector(model, train, dev, config.epochs,
                            config.batch_size, config.learning_rate,
                            config.seed);
  for (const auto& r : result.log)
    if (r.dev_loss < result.best_dev_loss || result.best_epoch == 0) {
      result.best_dev_loss = r.dev_loss;
      result.best_epoch = r.epoch;
    }
  if (!config.checkpoint_out.empty()) {
    save_checkpoint(config.checkpoint_out, model.to_checkpoint());
    result.checkpoint_path = config.checkpoint_out;
  }
  write_log_csv(config.log_out, result.log, "dev_auc");
  return result;
}

}  // namespace detsep
