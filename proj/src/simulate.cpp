// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "detsep/mixing.hpp"
#include "detsep/rng.hpp"
#include "detsep/synth.hpp"
#include "detsep/wave.hpp"

namespace fs = std::filesystem;

namespace detsep {

namespace {

using nlohmann::json;

// Substream bases keep entry streams unique and stable per category.
constexpr uint64_t kS2mBase = 0;
constexpr uint64_t kL2mBase = 1ull << 20;
constexpr uint64_t kKwpBase = 2ull << 20;
constexpr uint64_t kKwnBase = 3ull << 20;

std::string zero_pad(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", v);
  return buf;
}

// Overlays the keyword onto carrier speech at a random offset, at a level of
// keyword_embed_db over the carrier's mean power. Returns the offset.
int64_t embed_keyword(Waveform& carrier, Rng& rng,
                      const SimulationConfig& cfg) {
  Waveform kw = synth_keyword(rng.next_u64(), cfg.sample_rate_hz);
  if (kw.samples.size() > carrier.samples.size())
    throw std::runtime_error("simulate: keyword longer than the utterance");
  const int64_t offset = static_cast<int64_t>(
      rng.uniform_int(carrier.samples.size() - kw.samples.size() + 1));
  const double embed_db =
      rng.uniform(cfg.keyword_embed_db[0], cfg.keyword_embed_db[1]);
  const double g = std::sqrt(mean_power(carrier) *
                             std::pow(10.0, embed_db / 10.0) / mean_power(kw));
  for (std::size_t i = 0; i < kw.samples.size(); ++i)
    carrier.samples[offset + i] += g * kw.samples[i];
  return offset;
}

std::array<double, 2> range_from(const json& j, const char* key,
                                 std::array<double, 2> dflt) {
  if (!j.contains(key)) return dflt;
  auto arr = j.at(key);
  if (!arr.is_array() || arr.size() != 2)
    throw std::runtime_error(std::string("config: ") + key +
                             " must be [lo_db, hi_db]");
  return {arr[0].get<double>(), arr[1].get<double>()};
}

// Two speakers whose fundamentals are far enough apart to count as
// different voices; resamples the second seed until the ratio clears 1.25.
std::pair<uint64_t, uint64_t> draw_speaker_pair(Rng& rng) {
  const uint64_t a = rng.next_u64();
  uint64_t b = rng.next_u64();
  const double fa = speaker_f0_hz(a);
  for (int guard = 0; guard < 64; ++guard) {
    const double fb = speaker_f0_hz(b);
    const double ratio = fa > fb ? fa / fb : fb / fa;
    if (ratio >= 1.25) break;
    b = rng.next_u64();
  }
  return {a, b};
}

struct EntryFiles {
  Waveform mixture, ref_a;
  std::optional<Waveform> ref_b, noise;
};

void write_entry_files(const std::string& out_dir, ManifestEntry& e,
                       const EntryFiles& f) {
  write_wav(out_dir + "/" + e.mixture_path, f.mixture);
  if (e.ref_a_path != e.mixture_path)
    write_wav(out_dir + "/" + e.ref_a_path, f.ref_a);
  if (f.ref_b && e.ref_b_path)
    write_wav(out_dir + "/" + *e.ref_b_path, *f.ref_b);
  if (f.noise && e.noise_path)
    write_wav(out_dir + "/" + *e.noise_path, *f.noise);
}

ManifestEntry make_mixture_entry(const SimulationConfig& cfg,
                                 const std::string& id, uint64_t stream,
                                 bool with_keyword,
                                 const std::string& out_dir) {
  Rng rng(stream);
  const auto [seed_a, seed_b] = draw_speaker_pair(rng);

  Waveform a = synth_speaker(seed_a, cfg.duration_s, cfg.sample_rate_hz);
  Waveform b = synth_speaker(seed_b, cfg.duration_s, cfg.sample_rate_hz);
  int64_t offset = 0;
  if (with_keyword) offset = embed_keyword(a, rng, cfg);

  const double snr_ab = rng.uniform(cfg.snr_a_vs_b_db[0], cfg.snr_a_vs_b_db[1]);
  Waveform b_scaled = scale_to_snr(b, a, snr_ab);

  Waveform speech_sum = a;
  for (std::size_t i = 0; i < speech_sum.samples.size(); ++i)
    speech_sum.samples[i] += b_scaled.samples[i];
  const double snr_sn = rng.uniform(cfg.snr_speech_vs_noise_db[0],
                                    cfg.snr_speech_vs_noise_db[1]);
  Waveform noise = scale_to_snr(
      synth_ambient_noise(rng.next_u64(), cfg.duration_s, cfg.sample_rate_hz),
      speech_sum, snr_sn);

  Mixdown mixed = mix({a, b_scaled}, noise);
  for (auto& v : a.samples) v *= mixed.gain;
  for (auto& v : b_scaled.samples) v *= mixed.gain;
  for (auto& v : noise.samples) v *= mixed.gain;

  ManifestEntry e;
  e.id = id;
  e.mixture_path = "wav/" + id + "_mix.wav";
  e.ref_a_path = "wav/" + id + "_refa.wav";
  e.ref_b_path = "wav/" + id + "_refb.wav";
  e.noise_path = "wav/" + id + "_noise.wav";
  e.snr_a_vs_b_db = snr_ab;
  e.snr_speech_vs_noise_db = snr_sn;
  e.contains_keyword = with_keyword;
  e.keyword_offset_samples = offset;
  e.duration_seconds = mixed.mixture.duration_s();

  EntryFiles files{std::move(mixed.mixture), std::move(a), std::move(b_scaled),
                   std::move(noise)};
  write_entry_files(out_dir, e, files);
  return e;
}

ManifestEntry make_clean_entry(const SimulationConfig& cfg,
                               const std::string& id, uint64_t stream,
                               bool positive, const std::string& out_dir) {
  Rng rng(stream);
  Waveform clip;
  int64_t offset = 0;
  if (positive) {
    clip = synth_speaker(rng.next_u64(), cfg.duration_s, cfg.sample_rate_hz);
    offset = embed_keyword(clip, rng, cfg);
  } else if (rng.uniform() < 0.5) {
    clip = synth_speaker(rng.next_u64(), cfg.duration_s, cfg.sample_rate_hz);
  } else {
    clip = synth_ambient_noise(rng.next_u64(), cfg.duration_s,
                               cfg.sample_rate_hz);
  }

  ManifestEntry e;
  e.id = id;
  e.mixture_path = "wav/" + id + ".wav";
  e.ref_a_path = e.mixture_path;  // the clip is its own reference
  e.contains_keyword = positive;
  e.keyword_offset_samples = offset;
  e.duration_seconds = clip.duration_s();
  write_wav(out_dir + "/" + e.mixture_path, clip);
  return e;
}

}  // namespace

SimulationConfig SimulationConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  SimulationConfig cfg;
  cfg.sample_rate_hz = j.value("sample_rate_hz", cfg.sample_rate_hz);
  cfg.duration_s = j.value("duration_s", cfg.duration_s);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    cfg.keyword_mixtures = c.value("keyword_mixtures", 0);
    cfg.general_mixtures = c.value("general_mixtures", 0);
    cfg.kws_positive = c.value("kws_positive", 0);
    cfg.kws_negative = c.value("kws_negative", 0);
  }
  cfg.snr_a_vs_b_db = range_from(j, "snr_a_vs_b_db", cfg.snr_a_vs_b_db);
  cfg.snr_speech_vs_noise_db =
      range_from(j, "snr_speech_vs_noise_db", cfg.snr_speech_vs_noise_db);
  cfg.keyword_embed_db =
      range_from(j, "keyword_embed_db", cfg.keyword_embed_db);
  return cfg;
}

SimulationConfig SimulationConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string SimulationConfig::to_json_text() const {
  nlohmann::ordered_json j;
  j["sample_rate_hz"] = sample_rate_hz;
  j["duration_s"] = duration_s;
  j["seed"] = seed;
  j["counts"] = {{"keyword_mixtures", keyword_mixtures},
                 {"general_mixtures", general_mixtures},
                 {"kws_positive", kws_positive},
                 {"kws_negative", kws_negative}};
  j["snr_a_vs_b_db"] = snr_a_vs_b_db;
  j["snr_speech_vs_noise_db"] = snr_speech_vs_noise_db;
  j["keyword_embed_db"] = keyword_embed_db;
  return j.dump(2);
}

std::vector<ManifestEntry> simulate_corpus(const SimulationConfig& config,
                                           const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (ec)
    throw std::runtime_error("cannot create output directory: " + out_dir +
                             " (" + ec.message() + ")");

  std::vector<ManifestEntry> all, s2m, l2m, kws;
  for (int i = 0; i < config.keyword_mixtures; ++i) {
    auto e = make_mixture_entry(config, "s2m_" + zero_pad(i),
                                substream_seed(config.seed, kS2mBase + i),
                                /*with_keyword=*/true, out_dir);
    s2m.push_back(e);
    all.push_back(std::move(e));
  }
  for (int i = 0; i < config.general_mixtures; ++i) {
    auto e = make_mixture_entry(config, "l2m_" + zero_pad(i),
                                substream_seed(config.seed, kL2mBase + i),
                                /*with_keyword=*/false, out_dir);
    l2m.push_back(e);
    all.push_back(std::move(e));
  }
  for (int i = 0; i < config.kws_positive; ++i) {
    auto e = make_clean_entry(config, "kwp_" + zero_pad(i),
                              substream_seed(config.seed, kKwpBase + i),
                              /*positive=*/true, out_dir);
    kws.push_back(e);
    all.push_back(std::move(e));
  }
  for (int i = 0; i < config.kws_negative; ++i) {
    auto e = make_clean_entry(config, "kwn_" + zero_pad(i),
                              substream_seed(config.seed, kKwnBase + i),
                              /*positive=*/false, out_dir);
    kws.push_back(e);
    all.push_back(std::move(e));
  }

  std::vector<ManifestEntry> mixtures = s2m;
  mixtures.insert(mixtures.end(), l2m.begin(), l2m.end());
  write_manifest(out_dir + "/manifest.jsonl", all);
  write_manifest(out_dir + "/manifest_mix.jsonl", mixtures);
  write_manifest(out_dir + "/manifest_s2m.jsonl", s2m);
  write_manifest(out_dir + "/manifest_l2m.jsonl", l2m);
  write_manifest(out_dir + "/manifest_kws.jsonl", kws);
  return all;
}

}  // namespace detsep
