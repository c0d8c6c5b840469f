// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_TRAINING_HPP_
#define DETSEP_TRAINING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "detsep/models.hpp"

namespace detsep {

// pit_only trains an unconditioned baseline unless a fusion is configured;
// pdt_only and se require all-keyword manifests.
enum class TrainMode { kPitOnly, kPdtOnly, kPitPlusPdt, kSe };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct SeparatorTrainConfig {
  TrainMode mode = TrainMode::kPitPlusPdt;
  FusionMethod fusion = FusionMethod::kNone;
  ClueComposition composition = ClueComposition::kNone;
  int text_id = 0;
  int audio_clips = 0;
  uint64_t clue_seed = 1000;
  int cond_dim = 32;
  int hidden = 64;
  int layers = 2;
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
  std::string train_manifest;
  std::string dev_manifest;
  std::string checkpoint_out;
  std::string log_out;

  static SeparatorTrainConfig from_json_file(const std::string& path);
  static SeparatorTrainConfig from_json_text(const std::string& text);
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_metric = 0.0;  // dev si_snr (separator) or dev AUC (detector)
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<EpochRow> log;
  int best_epoch = 0;
  double best_dev_loss = 0.0;
};

// Optimizes the configured loss with Adam over the manifest; logs per-epoch
// train/dev loss and dev SI-SNR, early-stops on dev loss with patience 10,
// and writes the best checkpoint. Deterministic given the seed.
TrainResult train_separator(const SeparatorTrainConfig& config);

struct DetectorTrainConfig {
  int channels = 32;
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 1e-3;
  uint64_t seed = 2;
  std::string train_manifest;
  std::string dev_manifest;
  std::string checkpoint_out;
  std::string log_out;

  static DetectorTrainConfig from_json_file(const std::string& path);
  static DetectorTrainConfig from_json_text(const std::string& text);
};

// Max-pooling loss training on a labeled clean corpus; logs dev AUC per
// epoch. Throws "missing positive class" / "missing negative class" when a
// label side is absent.
TrainResult train_detector(const DetectorTrainConfig& config);

// In-memory labeled clips (used by both train_detector and fine-tuning).
struct LabeledAudio {
  Waveform audio;
  bool positive = false;
};

// Core fitting loop shared by detector training and fine-tuning; returns the
// per-epoch log. The model is updated in place with the best-dev-loss
// parameters (train set doubles as dev when dev is empty).
std::vector<EpochRow> fit_detector(DetectorModel& model,
                                   const std::vector<LabeledAudio>& train,
                                   const std::vector<LabeledAudio>& dev,
                                   int epochs, int batch_size, double lr,
                                   uint64_t seed);

// Rank-based AUC of positive over negative scores.
double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores);

void write_log_csv(const std::string& path, const std::vector<EpochRow>& log,
                   const std::string& metric_name);

}  // namespace detsep

#endif  // DETSEP_TRAINING_HPP_
