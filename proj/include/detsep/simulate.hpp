// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_SIMULATE_HPP_
#define DETSEP_SIMULATE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "detsep/manifest.hpp"

namespace detsep {

// Corpus recipe. A "keyword utterance" is speaker speech with the melodic
// keyword overlaid at a random offset; keyword mixtures use one as source A,
// and the clean kws_positive items are drawn from the same recipe so the
// detector's training domain matches the separated keyword channel.
// Negatives are plain speech or noise.
struct SimulationConfig {
  int sample_rate_hz = 8000;
  double duration_s = 1.5;
  uint64_t seed = 7;
  int keyword_mixtures = 0;
  int general_mixtures = 0;
  int kws_positive = 0;
  int kws_negative = 0;
  std::array<double, 2> snr_a_vs_b_db{-5.0, 5.0};
  std::array<double, 2> snr_speech_vs_noise_db{10.0, 20.0};
  // Keyword level over its carrier speech.
  std::array<double, 2> keyword_embed_db{3.0, 9.0};

  static SimulationConfig from_json_file(const std::string& path);
  static SimulationConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Writes WAV files plus manifest.jsonl (and the filtered views
// manifest_s2m.jsonl / manifest_l2m.jsonl / manifest_kws.jsonl) under
// out_dir. Fully deterministic in (config, seed); each entry draws from its
// own RNG substream so entries could be produced in any order.
std::vector<ManifestEntry> simulate_corpus(const SimulationConfig& config,
                                           const std::string& out_dir);

}  // namespace detsep

#endif  // DETSEP_SIMULATE_HPP_
