// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace detsep {

namespace {
using ordered_json = nlohmann::ordered_json;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    ordered_json j;
    j["id"] = e.id;
    j["mixture"] = e.mixture_path;
    j["ref_a"] = e.ref_a_path;
    j["ref_b"] = e.ref_b_path ? ordered_json(*e.ref_b_path) : ordered_json();
    j["noise"] = e.noise_path ? ordered_json(*e.noise_path) : ordered_json();
    j["snr_a_vs_b_db"] = e.snr_a_vs_b_db;
    j["snr_speech_vs_noise_db"] = e.snr_speech_vs_noise_db;
    j["contains_keyword"] = e.contains_keyword;
    j["keyword_offset_samples"] = e.keyword_offset_samples;
    j["duration_seconds"] = e.duration_seconds;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("short write on manifest: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& ex) {
      throw std::runtime_error("manifest parse error at " + path + ":" +
                               std::to_string(lineno) + ": " + ex.what());
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.mixture_path = j.at("mixture").get<std::string>();
    e.ref_a_path = j.at("ref_a").get<std::string>();
    if (!j.at("ref_b").is_null())
      e.ref_b_path = j.at("ref_b").get<std::string>();
    if (!j.at("noise").is_null())
      e.noise_path = j.at("noise").get<std::string>();
    e.snr_a_vs_b_db = j.at("snr_a_vs_b_db").get<double>();
    e.snr_speech_vs_noise_db = j.at("snr_speech_vs_noise_db").get<double>();
    e.contains_keyword = j.at("contains_keyword").get<bool>();
    e.keyword_offset_samples = j.at("keyword_offset_samples").get<int64_t>();
    e.duration_seconds = j.at("duration_seconds").get<double>();
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string resolve_manifest_path(const std::string& manifest_path,
                                  const std::string& relative) {
  return (std::filesystem::path(manifest_path).parent_path() / relative)
      .string();
}

}  // namespace detsep
