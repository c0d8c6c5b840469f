// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_MODELS_HPP_
#define DETSEP_MODELS_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "detsep/checkpoint.hpp"
#include "detsep/stft.hpp"
#include "detsep/tensor.hpp"
#include "detsep/wave.hpp"

namespace detsep {

enum class FusionMethod {
  kNone,
  kAppend,
  kFilm,
  kConcat,
  kConcatAvgPool,
  kCrossAttention,
};

enum class ClueComposition { kNone, kText, kAudio, kBoth };

std::string to_string(FusionMethod m);
std::string to_string(ClueComposition c);
FusionMethod fusion_from_string(const std::string& s);
ClueComposition composition_from_string(const std::string& s);

// Keyword side input: a text id and/or a fixed list of keyword clips. The
// clip list is frozen when the model is built and must be identical between
// training and inference.
struct ConditionClue {
  std::optional<int> keyword_id;
  std::vector<Waveform> clue_clips;
};

struct SeparatorConfig {
  int sample_rate_hz = 8000;
  StftConfig stft;
  int cond_dim = 32;  // shared dim of text and audio condition vectors
  int hidden = 64;    // per recurrent layer, split across both directions
  int layers = 2;
  int channels = 2;  // mask heads; 1 gives the enhancement variant
  FusionMethod fusion = FusionMethod::kNone;
  ClueComposition composition = ClueComposition::kNone;
  int text_vocab = 4;
  int text_id = 0;
  int audio_clips = 0;
  uint64_t clue_seed = 1000;  // seeds of the fixed clip list
  uint64_t init_seed = 1;
};

// Mask-based separator: log band-magnitude frontend, optional clue fusion,
// bidirectional GRU core, sigmoid mask heads, masked inverse STFT with the
// mixture phase. The fusion and clue-encoder parameters are initialized so
// that a freshly built conditioned model is bit-identical in output to the
// unconditioned one.
class SeparatorModel {
 public:
  explicit SeparatorModel(const SeparatorConfig& cfg);

  const SeparatorConfig& config() const { return cfg_; }
  bool conditioned() const {
    return cfg_.composition != ClueComposition::kNone;
  }

  std::vector<std::pair<std::string, ad::Tensor>>& named_params() {
    return params_;
  }
  std::vector<ad::Tensor> param_list() const;

  // One estimate waveform tensor per channel, on the tape. When `inference`
  // is set, condition vectors come from the cache (filled on first use, no
  // clue-encoder work afterwards); during training they are re-encoded so
  // gradients reach the encoders.
  std::vector<ad::Tensor> forward(const Waveform& mixture,
                                  const std::optional<ConditionClue>& clue,
                                  bool inference);

  int64_t clue_encoder_forwards() const { return clue_encoder_forwards_; }
  void clear_clue_cache() { cond_cache_.clear(); }

  Checkpoint to_checkpoint() const;
  static SeparatorModel from_checkpoint(const Checkpoint& ckpt);

  // Trainable clue encoders (exposed for tests and tooling).
  ad::Tensor encode_text_clue(int keyword_id);
  std::vector<ad::Tensor> encode_audio_clues(
      const std::vector<Waveform>& clue_clips);

 private:
  ad::Tensor find(const std::string& name) const;
  std::vector<ad::Tensor> condition_vectors(const ConditionClue& clue,
                                            bool inference);
  ad::Tensor core(const ad::Tensor& frames, int64_t n_tok);

  SeparatorConfig cfg_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
  std::vector<std::vector<double>> cond_cache_;
  int64_t clue_encoder_forwards_ = 0;
};

struct DetectorConfig {
  int sample_rate_hz = 8000;
  StftConfig stft;
  int channels = 32;
  int kernel = 5;
  std::vector<int> dilations{1, 2, 4};
  uint64_t init_seed = 2;
};

// Frame-level keyword detector: dilated temporal convolutions over the log
// band-magnitude features with a per-frame sigmoid posterior head.
class DetectorModel {
 public:
  explicit DetectorModel(const DetectorConfig& cfg);

  const DetectorConfig& config() const { return cfg_; }
  std::vector<std::pair<std::string, ad::Tensor>>& named_params() {
    return params_;
  }
  std::vector<ad::Tensor> param_list() const;

  // Posterior per frame, shape {T}; audio must span at least one frame.
  ad::Tensor forward(const Waveform& audio);

  int64_t forward_count() const { return forward_count_; }

  Checkpoint to_checkpoint() const;
  static DetectorModel from_checkpoint(const Checkpoint& ckpt);

 private:
  ad::Tensor find(const std::string& name) const;

  DetectorConfig cfg_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
  int64_t forward_count_ = 0;
};

// The fixed clue matching a separator's configuration (text id plus
// `audio_clips` keyword variants drawn from clue_seed).
ConditionClue make_clue(const SeparatorConfig& cfg);

// Inference wrappers.
std::pair<Waveform, Waveform> separate(const Waveform& mixture,
                                       const std::optional<ConditionClue>& clue,
                                       SeparatorModel& model);
Waveform enhance(const Waveform& mixture,
                 const std::optional<ConditionClue>& clue,
                 SeparatorModel& model);

struct DetectionResult {
  std::vector<double> frame_posteriors;
  double score = 0.0;  // max posterior
};
DetectionResult detect(const Waveform& audio, DetectorModel& model);

}  // namespace detsep

#endif  // DETSEP_MODELS_HPP_
