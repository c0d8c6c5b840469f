// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "detsep/rng.hpp"

namespace detsep {

namespace {

constexpr uint64_t kSpeakerTag = 0x5350454b52ull;  // stream domain separators
constexpr uint64_t kKeywordTag = 0x4b455957ull;
constexpr uint64_t kNoiseTag = 0x4e4f495345ull;

void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double rms = std::sqrt(acc / x.size());
  if (rms <= 0.0) return;
  const double g = target / rms;
  for (double& v : x) v *= g;
}

}  // namespace

double speaker_f0_hz(uint64_t speaker_seed) {
  Rng rng(speaker_seed ^ kSpeakerTag);
  return 90.0 + 210.0 * rng.uniform();
}

Waveform synth_speaker(uint64_t speaker_seed, double duration_s,
                       int sample_rate_hz) {
  if (duration_s <= 0.0)
    throw std::runtime_error("synth_speaker: duration must be positive");
  Rng rng(speaker_seed ^ kSpeakerTag);
  const double f0 = 90.0 + 210.0 * rng.uniform();

  const int harmonics =
      std::max(1, static_cast<int>(std::floor(3600.0 / f0)));
  std::vector<double> amp(harmonics), phase(harmonics);
  // Formant-like resonances fixed per speaker.
  const double formant1 = rng.uniform(300.0, 900.0);
  const double formant2 = rng.uniform(1200.0, 2600.0);
  for (int h = 0; h < harmonics; ++h) {
    const double freq = f0 * (h + 1);
    double shape = 1.0 / std::pow(h + 1.0, 0.7);
    shape *= 1.0 + 2.5 * std::exp(-std::pow((freq - formant1) / 180.0, 2.0));
    shape *= 1.0 + 1.5 * std::exp(-std::pow((freq - formant2) / 320.0, 2.0));
    amp[h] = shape;
    phase[h] = rng.uniform(0.0, 2.0 * M_PI);
  }

  // Vibrato plus slow drift move all harmonics together.
  const double vib_rate = rng.uniform(3.0, 7.0);
  const double vib_depth = rng.uniform(0.005, 0.02);
  const double vib_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double drift_rate = rng.uniform(0.3, 1.0);
  const double drift_depth = rng.uniform(0.005, 0.015);
  const double drift_phase = rng.uniform(0.0, 2.0 * M_PI);

  // Syllable-rate amplitude envelope.
  const double env_rate1 = rng.uniform(1.5, 3.5);
  const double env_rate2 = rng.uniform(4.0, 7.0);
  const double env_phase1 = rng.uniform(0.0, 2.0 * M_PI);
  const double env_phase2 = rng.uniform(0.0, 2.0 * M_PI);

  const std::size_t n =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::vector<double> x(n, 0.0);
  double theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double inst =
        f0 * (1.0 + vib_depth * std::sin(2.0 * M_PI * vib_rate * t + vib_phase) +
              drift_depth * std::sin(2.0 * M_PI * drift_rate * t + drift_phase));
    theta += 2.0 * M_PI * inst / sample_rate_hz;
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h)
      s += amp[h] * std::sin((h + 1) * theta + phase[h]);
    // Syllable-like bursts with near-silent gaps between them.
    double env =
        0.15 + 0.85 * std::sin(2.0 * M_PI * env_rate1 * t + env_phase1) *
                   std::sin(2.0 * M_PI * env_rate2 * t + env_phase2);
    env = std::max(env, 0.02);
    x[i] = env * s;
  }
  normalize_rms(x, 0.15);

  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples = std::move(x);
  return w;
}

Waveform synth_keyword(uint64_t variant_seed, int sample_rate_hz) {
  Rng rng(variant_seed ^ kKeywordTag);
  const double warp = 1.0 + 0.02 * (2.0 * rng.uniform() - 1.0);
  const double gain = 1.0 + 0.05 * (2.0 * rng.uniform() - 1.0);

  constexpr double kBaseDur = 0.4;
  // Three rising tone bursts; the carrier phase is a fixed function of
  // absolute time, only the burst envelope is warped, so variants correlate.
  constexpr double kF[3][2] = {{500.0, 700.0}, {820.0, 1120.0},
                               {1250.0, 1650.0}};

  const std::size_t n = static_cast<std::size_t>(
      std::llround(kBaseDur * warp * sample_rate_hz));
  std::vector<double> x(n, 0.0);

  // Carrier phase: integrate the piecewise-linear frequency trajectory over
  // unwarped time.
  double theta = 0.0;
  const double seg_dur = kBaseDur / 3.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    int seg = std::min(2, static_cast<int>(t / seg_dur));
    const double frac = std::min(1.0, (t - seg * seg_dur) / seg_dur);
    const double freq = kF[seg][0] + (kF[seg][1] - kF[seg][0]) * frac;
    theta += 2.0 * M_PI * freq / sample_rate_hz;

    // Envelope on the warped clock: a Hann bump per burst.
    const double tw = t / warp;
    const int eseg = std::min(2, static_cast<int>(tw / seg_dur));
    const double efrac =
        std::clamp((tw - eseg * seg_dur) / seg_dur, 0.0, 1.0);
    const double env = 0.5 * (1.0 - std::cos(2.0 * M_PI * efrac));
    x[i] = 0.5 * gain * env * std::sin(theta);
  }

  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples = std::move(x);
  return w;
}

Waveform synth_ambient_noise(uint64_t seed, double duration_s,
                             int sample_rate_hz) {
  if (duration_s <= 0.0)
    throw std::runtime_error("synth_ambient_noise: duration must be positive");
  Rng rng(seed ^ kNoiseTag);
  const std::size_t n =
      static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::vector<double> x(n);
  const double a = std::exp(-2.0 * M_PI * 600.0 / sample_rate_hz);
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double white = rng.gauss();
    lp = a * lp + (1.0 - a) * white;
    x[i] = lp + 0.05 * white;
  }
  normalize_rms(x, 0.15);
  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples = std::move(x);
  return w;
}

}  // namespace detsep
