// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "detsep/manifest.hpp"
#include "detsep/mixing.hpp"
#include "detsep/rng.hpp"
#include "detsep/simulate.hpp"
#include "detsep/stft.hpp"
#include "detsep/synth.hpp"
#include "detsep/wave.hpp"

using namespace detsep;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("detsep_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// Peak of the normalized cross-correlation over all lags.
double peak_normalized_xcorr(const std::vector<double>& a,
                             const std::vector<double>& b) {
  double ea = 0.0, eb = 0.0;
  for (double v : a) ea += v * v;
  for (double v : b) eb += v * v;
  const double denom = std::sqrt(ea * eb);
  REQUIRE(denom > 0.0);
  double best = 0.0;
  const auto la = static_cast<int64_t>(a.size());
  const auto lb = static_cast<int64_t>(b.size());
  for (int64_t lag = -lb + 1; lag < la; ++lag) {
    double acc = 0.0;
    for (int64_t i = std::max<int64_t>(0, lag);
         i < std::min(la, lb + lag); ++i)
      acc += a[i] * b[i - lag];
    best = std::max(best, std::fabs(acc) / denom);
  }
  return best;
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("wav float32 round trip is exact for float-representable samples") {
  const auto dir = temp_dir("wav");
  Waveform w;
  w.sample_rate_hz = 8000;
  Rng rng(1);
  for (int i = 0; i < 4000; ++i)
    w.samples.push_back(static_cast<double>(static_cast<float>(
        rng.uniform(-1.0, 1.0))));
  write_wav(dir + "/a.wav", w, WavEncoding::kFloat32);
  auto r = read_wav(dir + "/a.wav");
  CHECK(r.sample_rate_hz == 8000);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(r.samples[i] == w.samples[i]);
}

TEST_CASE("wav pcm16 round trip is within one quantization step") {
  const auto dir = temp_dir("wav16");
  Waveform w;
  w.samples = {0.5, -0.25, 0.124999, 0.9};
  write_wav(dir + "/a.wav", w, WavEncoding::kPcm16);
  auto r = read_wav(dir + "/a.wav");
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::fabs(r.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("wav error paths") {
  const auto dir = temp_dir("wavbad");
  {
    std::ofstream os(dir + "/trunc.wav", std::ios::binary);
    os << "RIFF\x10\x00\x00\x00WAVEfm";
  }
  CHECK_THROWS_WITH_AS(read_wav(dir + "/trunc.wav"),
                       doctest::Contains("malformed WAV"), std::runtime_error);

  // Stereo file: valid header, channels=2.
  {
    Waveform w;
    w.samples = {0.1, -0.1};
    write_wav(dir + "/mono.wav", w, WavEncoding::kPcm16);
    auto bytes = read_bytes(dir + "/mono.wav");
    bytes[22] = 2;  // channel count field
    std::ofstream os(dir + "/stereo.wav", std::ios::binary);
    os << bytes;
  }
  CHECK_THROWS_WITH_AS(read_wav(dir + "/stereo.wav"),
                       doctest::Contains("expected mono"), std::runtime_error);
}

TEST_CASE("scale_to_snr identities and post-hoc recovery") {
  Waveform sig, ref;
  sig.samples.assign(1000, 1.0);
  ref.samples.assign(1000, 1.0);

  // equal power, 0 dB -> unit gain
  auto out0 = scale_to_snr(sig, ref, 0.0);
  CHECK(out0.samples[0] == doctest::Approx(1.0).epsilon(1e-12));
  // equal power, 20 dB -> gain 0.1
  auto out20 = scale_to_snr(sig, ref, 20.0);
  CHECK(out20.samples[0] == doctest::Approx(0.1).epsilon(1e-12));

  // random pair at 5 dB: re-measured SNR within 1e-9 dB
  Rng rng(3);
  Waveform a, b;
  for (int i = 0; i < 5000; ++i) {
    a.samples.push_back(rng.gauss());
    b.samples.push_back(rng.gauss() * 0.3);
  }
  auto scaled = scale_to_snr(b, a, 5.0);
  CHECK(measure_snr_db(a, scaled) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(std::fabs(measure_snr_db(a, scaled) - 5.0) < 1e-9);

  Waveform zero;
  zero.samples.assign(100, 0.0);
  CHECK_THROWS_WITH_AS(scale_to_snr(zero, ref, 0.0),
                       doctest::Contains("degenerate energy"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(scale_to_snr(sig, zero, 0.0),
                       doctest::Contains("degenerate energy"),
                       std::runtime_error);
}

TEST_CASE("mix identities, cancellation and joint rescale") {
  Waveform s = synth_speaker(11, 0.5, 8000);
  Waveform zeros;
  zeros.samples.assign(s.samples.size(), 0.0);

  auto m1 = mix({s, zeros});
  CHECK(m1.gain == 1.0);
  for (std::size_t i = 0; i < s.samples.size(); ++i)
    CHECK(m1.mixture.samples[i] == s.samples[i]);

  Waveform neg = s;
  for (auto& v : neg.samples) v = -v;
  auto m2 = mix({s, neg});
  for (double v : m2.mixture.samples) CHECK(v == 0.0);

  // two in-phase unit sinusoids: peak 2 pre-scale, output peak 0.9, both
  // stored references scaled by 0.45 and still summing to the mixture
  Waveform t1, t2;
  for (int i = 0; i < 8000; ++i) {
    const double v = std::sin(2.0 * M_PI * 440.0 * i / 8000.0);
    t1.samples.push_back(v);
    t2.samples.push_back(v);
  }
  auto m3 = mix({t1, t2});
  CHECK(peak_abs(m3.mixture) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(m3.gain == doctest::Approx(0.45).epsilon(1e-9));
  for (auto& v : t1.samples) v *= m3.gain;
  for (auto& v : t2.samples) v *= m3.gain;
  for (std::size_t i = 0; i < t1.samples.size(); ++i)
    CHECK(t1.samples[i] + t2.samples[i] ==
          doctest::Approx(m3.mixture.samples[i]).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(mix({}), doctest::Contains("empty source list"),
                       std::runtime_error);
}

TEST_CASE("synth_speaker determinism, length and speaker distinctness") {
  auto a1 = synth_speaker(1, 0.5, 8000);
  auto a2 = synth_speaker(1, 0.5, 8000);
  CHECK(a1.samples == a2.samples);
  CHECK(a1.samples.size() == 4000);

  auto b = synth_speaker(2, 0.5, 8000);
  CHECK(peak_normalized_xcorr(a1.samples, b.samples) < 0.5);

  CHECK_THROWS_AS(synth_speaker(1, 0.0, 8000), std::runtime_error);
}

TEST_CASE("synth_keyword variants stay one class") {
  auto v0 = synth_keyword(0, 8000);
  auto v0b = synth_keyword(0, 8000);
  CHECK(v0.samples == v0b.samples);

  // length within the +-2% warp bound
  for (uint64_t seed : {0ull, 1ull, 2ull, 3ull, 9ull}) {
    auto v = synth_keyword(seed, 8000);
    CHECK(v.samples.size() >= std::size_t(0.392 * 8000));
    CHECK(v.samples.size() <= std::size_t(0.408 * 8000));
  }

  // pairwise correlation over a handful of variants
  for (uint64_t i = 0; i < 4; ++i)
    for (uint64_t j = i + 1; j < 5; ++j) {
      auto a = synth_keyword(i, 8000);
      auto b = synth_keyword(j, 8000);
      CHECK(peak_normalized_xcorr(a.samples, b.samples) > 0.8);
    }
}

TEST_CASE("stft round trip is exact over the original length") {
  Waveform s = synth_speaker(5, 0.7, 8000);
  auto spec = stft(s.samples);
  auto rec = istft(spec);
  REQUIRE(rec.size() == s.samples.size());
  for (std::size_t i = 0; i < rec.size(); ++i)
    CHECK(rec[i] == doctest::Approx(s.samples[i]).epsilon(1e-10));
}

TEST_CASE("unpadded frame count contract") {
  CHECK(unpadded_frame_count(256) == 1);
  CHECK(unpadded_frame_count(256 + 128) == 2);
  CHECK(unpadded_frame_count(8000) == (8000 - 256) / 128 + 1);
  CHECK_THROWS_WITH_AS(unpadded_frame_count(100),
                       doctest::Contains("too short"), std::runtime_error);
}

TEST_CASE("simulate_corpus determinism, manifest sum and SNR fields") {
  SimulationConfig cfg;
  cfg.keyword_mixtures = 4;
  cfg.general_mixtures = 4;
  cfg.kws_positive = 2;
  cfg.kws_negative = 2;
  cfg.duration_s = 1.0;
  cfg.seed = 7;

  const auto dir1 = temp_dir("sim1");
  const auto dir2 = temp_dir("sim2");
  auto e1 = simulate_corpus(cfg, dir1);
  auto e2 = simulate_corpus(cfg, dir2);
  REQUIRE(e1.size() == 12);

  // byte-identical reruns
  CHECK(read_bytes(dir1 + "/manifest.jsonl") ==
        read_bytes(dir2 + "/manifest.jsonl"));
  CHECK(read_bytes(dir1 + "/wav/s2m_00000_mix.wav") ==
        read_bytes(dir2 + "/wav/s2m_00000_mix.wav"));

  const std::string manifest = dir1 + "/manifest.jsonl";
  for (const auto& e : read_manifest(manifest)) {
    if (!e.ref_b_path) {
      // clean detector items reference themselves
      CHECK(e.mixture_path == e.ref_a_path);
      continue;
    }
    auto mixw = read_wav(resolve_manifest_path(manifest, e.mixture_path));
    auto ra = read_wav(resolve_manifest_path(manifest, e.ref_a_path));
    auto rb = read_wav(resolve_manifest_path(manifest, *e.ref_b_path));
    auto nz = read_wav(resolve_manifest_path(manifest, *e.noise_path));
    REQUIRE(ra.samples.size() == mixw.samples.size());
    REQUIRE(rb.samples.size() == mixw.samples.size());

    // post-scaling sources and noise sum to the stored mixture
    for (std::size_t i = 0; i < mixw.samples.size(); ++i) {
      const double sum = ra.samples[i] + rb.samples[i] + nz.samples[i];
      CHECK(std::fabs(sum - mixw.samples[i]) < 1e-6);
    }

    // manifest SNR fields match what the files measure
    CHECK(std::fabs(measure_snr_db(ra, rb) - e.snr_a_vs_b_db) < 1e-6);
    Waveform speech = ra;
    for (std::size_t i = 0; i < speech.samples.size(); ++i)
      speech.samples[i] += rb.samples[i];
    CHECK(std::fabs(measure_snr_db(speech, nz) - e.snr_speech_vs_noise_db) <
          1e-6);

    if (e.contains_keyword) {
      CHECK(e.id.substr(0, 3) == "s2m");
      CHECK(e.keyword_offset_samples + 0.392 * 8000 <=
            static_cast<double>(mixw.samples.size()));
    }
  }

  // zero counts -> empty manifest, no error
  SimulationConfig empty_cfg;
  const auto dir3 = temp_dir("sim3");
  auto e3 = simulate_corpus(empty_cfg, dir3);
  CHECK(e3.empty());
  CHECK(read_bytes(dir3 + "/manifest.jsonl").empty());
}

TEST_CASE("manifest round trip") {
  const auto dir = temp_dir("manifest");
  std::vector<ManifestEntry> entries(2);
  entries[0].id = "s2m_00000";
  entries[0].mixture_path = "wav/a.wav";
  entries[0].ref_a_path = "wav/b.wav";
  entries[0].ref_b_path = "wav/c.wav";
  entries[0].noise_path = "wav/d.wav";
  entries[0].snr_a_vs_b_db = -1.25;
  entries[0].snr_speech_vs_noise_db = 7.5;
  entries[0].contains_keyword = true;
  entries[0].keyword_offset_samples = 1234;
  entries[0].duration_seconds = 1.5;
  entries[1].id = "kwn_00000";
  entries[1].mixture_path = "wav/e.wav";
  entries[1].ref_a_path = "wav/e.wav";

  write_manifest(dir + "/m.jsonl", entries);
  auto back = read_manifest(dir + "/m.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == entries[0].id);
  CHECK(back[0].ref_b_path == entries[0].ref_b_path);
  CHECK(back[0].snr_a_vs_b_db == entries[0].snr_a_vs_b_db);
  CHECK(back[0].contains_keyword);
  CHECK(back[0].keyword_offset_samples == 1234);
  CHECK(!back[1].ref_b_path);
  CHECK(!back[1].noise_path);
}
