// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_MANIFEST_HPP_
#define DETSEP_MANIFEST_HPP_

#include <optional>
#include <string>
#include <vector>

namespace detsep {

// Mixing recipe for one simulated utterance.
struct MixtureSpec {
  std::string source_a_id;
  std::string source_b_id;
  std::optional<std::string> noise_id;
  double snr_a_vs_b_db = 0.0;          // level of source A over source B
  double snr_speech_vs_noise_db = 0.0;
  bool contains_keyword = false;       // y_k; source A carries the keyword
  int64_t keyword_offset_samples = 0;
};

// One manifest line. Paths are stored relative to the manifest file.
// Clean (single-source) items leave ref_b and noise unset.
struct ManifestEntry {
  std::string id;
  std::string mixture_path;
  std::string ref_a_path;
  std::optional<std::string> ref_b_path;
  std::optional<std::string> noise_path;
  double snr_a_vs_b_db = 0.0;
  double snr_speech_vs_noise_db = 0.0;
  bool contains_keyword = false;
  int64_t keyword_offset_samples = 0;
  double duration_seconds = 0.0;
};

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Joins a manifest-relative path onto the manifest's directory.
std::string resolve_manifest_path(const std::string& manifest_path,
                                  const std::string& relative);

}  // namespace detsep

#endif  // DETSEP_MANIFEST_HPP_
