// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detsep/metrics.hpp"
#include "detsep/mixing.hpp"
#include "detsep/rng.hpp"
#include "detsep/synth.hpp"

using namespace detsep;

namespace {

Waveform wf(std::vector<double> v, int rate = 8000) {
  Waveform w;
  w.samples = std::move(v);
  w.sample_rate_hz = rate;
  return w;
}

Waveform random_wave(Rng& rng, std::size_t n) {
  Waveform w;
  w.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(rng.gauss());
  return w;
}

// Test-local SI-SNR, written independently of the library implementation.
double oracle_si_snr(const Waveform& est, const Waveform& ref) {
  const std::size_t n = est.samples.size();
  double em = std::accumulate(est.samples.begin(), est.samples.end(), 0.0) / n;
  double rm = std::accumulate(ref.samples.begin(), ref.samples.end(), 0.0) / n;
  double er = 0, rr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    er += (est.samples[i] - em) * (ref.samples[i] - rm);
    rr += (ref.samples[i] - rm) * (ref.samples[i] - rm);
  }
  const double alpha = er / rr;
  double t2 = 0, r2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = alpha * (ref.samples[i] - rm);
    const double res = (est.samples[i] - em) - t;
    t2 += t * t;
    r2 += res * res;
  }
  return 10.0 * std::log10((t2 + 1e-8) / (r2 + 1e-8));
}

}  // namespace

TEST_CASE("si_snr hand example") {
  // est=[2,1,0,-1], ref=[1,0,-1,0]: alpha=1, target=ref,
  // residual=[0.5,0.5,0.5,-1.5], ratio 2/3 -> 10 log10(2/3) = -1.7609 dB.
  const double v = si_snr(wf({2, 1, 0, -1}), wf({1, 0, -1, 0}));
  CHECK(v == doctest::Approx(10.0 * std::log10(2.0 / 3.0)).epsilon(1e-6));
  CHECK(v == doctest::Approx(-1.76).epsilon(0.01));
}

TEST_CASE("si_snr perfect and orthogonal cases") {
  Waveform s = synth_speaker(3, 0.5, 8000);
  CHECK(si_snr(s, s) > 30.0);
  CHECK(si_snr_clipped(s, s) == 30.0);

  // zero-mean orthogonal estimate: alpha = 0, everything is residual
  Waveform ref = wf({1, 0, -1, 0});
  Waveform est = wf({0, 1, 0, -1});
  CHECK(si_snr(est, ref) < -30.0);
  CHECK(si_snr_clipped(est, ref) == -30.0);

  CHECK_THROWS_WITH_AS(si_snr(est, wf({1, 1, 1, 1})),
                       doctest::Contains("degenerate reference"),
                       std::runtime_error);
}

TEST_CASE("si_snr scale and offset invariance") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    // estimate correlated with the reference (the non-degenerate regime;
    // near-orthogonal estimates are the documented -30 dB floor case)
    Waveform ref = random_wave(rng, 400);
    Waveform est = ref;
    for (auto& v : est.samples) v += 0.5 * rng.gauss();
    const double base = si_snr(est, ref);
    for (double a : {0.5, 2.0, 10.0}) {
      Waveform scaled = est;
      for (auto& v : scaled.samples) v *= a;
      CHECK(std::fabs(si_snr(scaled, ref) - base) < 1e-6);
    }
    Waveform offset = est;
    for (auto& v : offset.samples) v += 3.7;
    CHECK(std::fabs(si_snr(offset, ref) - base) < 1e-6);
  }
}

TEST_CASE("si_snr matches the independent oracle") {
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    Waveform ref = random_wave(rng, 256);
    Waveform est = random_wave(rng, 256);
    CHECK(si_snr(est, ref) ==
          doctest::Approx(oracle_si_snr(est, ref)).epsilon(1e-10));
  }
}

TEST_CASE("si_snr_improvement identities") {
  Rng rng(9);
  Waveform ref = random_wave(rng, 500);
  Waveform mixture = random_wave(rng, 500);
  CHECK(si_snr_improvement(mixture, ref, mixture) == doctest::Approx(0.0));
  Waveform est = random_wave(rng, 500);
  CHECK(si_snr_improvement(est, ref, mixture) ==
        doctest::Approx(si_snr(est, ref) - si_snr(mixture, ref)));
}

TEST_CASE("stoi self-identity, noise floor and monotonicity") {
  Waveform s = synth_speaker(21, 3.0, 8000);
  CHECK(stoi(s, s) == doctest::Approx(1.0).epsilon(1e-6));

  // independent noise against speech scores low
  Waveform noise = synth_ambient_noise(99, 3.0, 8000);
  Rng rng(4);
  Waveform white;
  white.sample_rate_hz = 8000;
  for (int i = 0; i < 24000; ++i) white.samples.push_back(rng.gauss() * 0.1);
  CHECK(stoi(white, s) < 0.3);

  // additive-noise ladder 20 / 0 / -10 dB degrades strictly
  double prev = 1.0;
  std::vector<double> values;
  for (double snr : {20.0, 0.0, -10.0}) {
    Waveform scaled = scale_to_snr(noise, s, snr);
    Waveform noisy = s;
    for (std::size_t i = 0; i < noisy.samples.size(); ++i)
      noisy.samples[i] += scaled.samples[i];
    const double v = stoi(noisy, s);
    values.push_back(v);
    CHECK(v < prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK(values[0] > values[1]);
  CHECK(values[1] > values[2]);

  Waveform brief = synth_speaker(2, 0.3, 8000);
  CHECK_THROWS_WITH_AS(stoi(brief, brief),
                       doctest::Contains("insufficient frames"),
                       std::runtime_error);
}

TEST_CASE("stoi stays in [0, 1] on varied inputs") {
  Rng rng(31);
  for (int rep = 0; rep < 6; ++rep) {
    Waveform a = synth_speaker(rng.next_u64(), 1.5, 8000);
    Waveform b = synth_speaker(rng.next_u64(), 1.5, 8000);
    const double v = stoi(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("best_permutation identity and swap") {
  Waveform a = synth_speaker(1, 0.5, 8000);
  Waveform b = synth_speaker(2, 0.5, 8000);

  auto id = best_permutation({a, b}, {a, b});
  CHECK(id.permutation == std::vector<int>{0, 1});

  auto sw = best_permutation({a, b}, {b, a});
  CHECK(sw.permutation == std::vector<int>{1, 0});

  CHECK_THROWS_WITH_AS(best_permutation({a}, {a, b}),
                       doctest::Contains("channel count mismatch"),
                       std::runtime_error);
}

TEST_CASE("best_permutation matches exhaustive oracle on random N=3 cases") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Waveform> est, ref;
    for (int c = 0; c < 3; ++c) {
      est.push_back(random_wave(rng, 128));
      ref.push_back(random_wave(rng, 128));
    }
    auto got = best_permutation(est, ref);

    // independent exhaustive search on the oracle metric
    std::vector<int> perm{0, 1, 2}, best_perm;
    double best = -1e300;
    do {
      double total = 0.0;
      for (int i = 0; i < 3; ++i) total += oracle_si_snr(est[i], ref[perm[i]]);
      if (total > best) {
        best = total;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    CHECK(got.permutation == best_perm);
    CHECK(got.total_si_snr_db == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("best_permutation total never loses to the identity assignment") {
  Rng rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Waveform> est, ref;
    for (int c = 0; c < 2; ++c) {
      est.push_back(random_wave(rng, 200));
      ref.push_back(random_wave(rng, 200));
    }
    auto got = best_permutation(est, ref);
    const double identity =
        si_snr(est[0], ref[0]) + si_snr(est[1], ref[1]);
    CHECK(got.total_si_snr_db >= identity - 1e-12);
  }
}
