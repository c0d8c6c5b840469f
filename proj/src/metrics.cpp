// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "detsep/fft.hpp"

namespace detsep {

namespace {

constexpr double kSiSnrEps = 1e-8;
constexpr double kClipDb = 30.0;

void require_equal_lengths(const Waveform& a, const Waveform& b,
                           const char* what) {
  if (a.samples.size() != b.samples.size())
    throw std::runtime_error(std::string(what) + ": length mismatch " +
                             std::to_string(a.samples.size()) + " vs " +
                             std::to_string(b.samples.size()));
  if (a.samples.empty())
    throw std::runtime_error(std::string(what) + ": empty input");
}

}  // namespace

double si_snr(const Waveform& estimate, const Waveform& reference) {
  require_equal_lengths(estimate, reference, "si_snr");
  const std::size_t n = estimate.samples.size();
  double em = 0.0, rm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    em += estimate.samples[i];
    rm += reference.samples[i];
  }
  em /= n;
  rm /= n;
  double er = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = estimate.samples[i] - em;
    const double r = reference.samples[i] - rm;
    er += e * r;
    rr += r * r;
  }
  if (rr <= 0.0) throw std::runtime_error("degenerate reference");
  const double alpha = er / rr;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = estimate.samples[i] - em;
    const double r = reference.samples[i] - rm;
    const double t = alpha * r;
    target += t * t;
    residual += (e - t) * (e - t);
  }
  return 10.0 * std::log10((target + kSiSnrEps) / (residual + kSiSnrEps));
}

double si_snr_clipped(const Waveform& estimate, const Waveform& reference) {
  return std::clamp(si_snr(estimate, reference), -kClipDb, kClipDb);
}

double si_snr_improvement(const Waveform& estimate, const Waveform& reference,
                          const Waveform& mixture) {
  return si_snr(estimate, reference) - si_snr(mixture, reference);
}

// ---------------------------------------------------------------------------
// STOI
// ---------------------------------------------------------------------------

namespace {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 512;
constexpr int kStoiHop = 256;
constexpr int kStoiBands = 15;
constexpr double kStoiFirstBandHz = 150.0;
constexpr int kStoiSegment = 30;
constexpr double kStoiSdrClipDb = -13.0;
constexpr double kStoiDynRangeDb = 40.0;
constexpr int kSincHalf = 32;  // 64-tap kernel

// Windowed-sinc interpolation to a new rate; cutoff at the lower Nyquist.
std::vector<double> resample(const std::vector<double>& x, int in_rate,
                             int out_rate) {
  if (in_rate == out_rate) return x;
  const double step = static_cast<double>(in_rate) / out_rate;
  const double fc = std::min(in_rate, out_rate) / 2.0 / in_rate;  // cycles/sample
  const std::size_t out_len =
      static_cast<std::size_t>(std::floor((x.size() - 1) / step)) + 1;
  std::vector<double> y(out_len, 0.0);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = m * step;
    const auto lo = static_cast<int64_t>(std::ceil(t)) - kSincHalf;
    const auto hi = static_cast<int64_t>(std::floor(t)) + kSincHalf;
    double acc = 0.0;
    for (int64_t k = std::max<int64_t>(lo, 0);
         k <= std::min<int64_t>(hi, static_cast<int64_t>(x.size()) - 1); ++k) {
      const double u = t - static_cast<double>(k);
      double kern;
      if (std::fabs(u) < 1e-12) {
        kern = 2.0 * fc;
      } else {
        kern = std::sin(2.0 * M_PI * fc * u) / (M_PI * u);
      }
      const double w = 0.5 * (1.0 + std::cos(M_PI * u / (kSincHalf + 1)));
      acc += x[static_cast<std::size_t>(k)] * kern * w;
    }
    y[m] = acc / (2.0 * fc);
  }
  return y;
}

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

// Drop frames whose reference energy is more than 40 dB below the loudest
// reference frame; retained windowed frames are overlap-added back to back.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = hann(kStoiFrame);
  const std::size_t frames =
      x.size() < kStoiFrame ? 0 : (x.size() - kStoiFrame) / kStoiHop + 1;
  std::vector<double> energy_db(frames);
  double peak = -1e300;
  for (std::size_t f = 0; f < frames; ++f) {
    double e = 0.0;
    for (int i = 0; i < kStoiFrame; ++i) {
      const double v = x[f * kStoiHop + i] * w[i];
      e += v * v;
    }
    energy_db[f] = 10.0 * std::log10(e + 1e-300);
    peak = std::max(peak, energy_db[f]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < frames; ++f)
    if (energy_db[f] > peak - kStoiDynRangeDb) keep.push_back(f);

  std::vector<double> xs(keep.empty() ? 0 : (keep.size() - 1) * kStoiHop + kStoiFrame,
                         0.0);
  std::vector<double> ys(xs.size(), 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    for (int i = 0; i < kStoiFrame; ++i) {
      xs[j * kStoiHop + i] += x[keep[j] * kStoiHop + i] * w[i];
      ys[j * kStoiHop + i] += y[keep[j] * kStoiHop + i] * w[i];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// frames x bands envelope matrix: sqrt of summed |X|^2 per one-third-octave
// band.
std::vector<std::vector<double>> band_envelopes(const std::vector<double>& x) {
  const auto w = hann(kStoiFrame);
  const std::size_t frames =
      x.size() < kStoiFrame ? 0 : (x.size() - kStoiFrame) / kStoiHop + 1;

  // Band edges: centers 150 * 2^(j/3), half-octave-of-a-third edges.
  std::vector<std::pair<int, int>> bands;  // [lo_bin, hi_bin)
  const double bin_hz = static_cast<double>(kStoiRate) / kStoiFrame;
  for (int j = 0; j < kStoiBands; ++j) {
    const double center = kStoiFirstBandHz * std::pow(2.0, j / 3.0);
    const double lo = center * std::pow(2.0, -1.0 / 6.0);
    const double hi = center * std::pow(2.0, 1.0 / 6.0);
    int lo_bin = static_cast<int>(std::ceil(lo / bin_hz));
    int hi_bin = static_cast<int>(std::ceil(hi / bin_hz));
    bands.emplace_back(lo_bin, hi_bin);
  }

  std::vector<std::vector<double>> env(frames,
                                       std::vector<double>(kStoiBands, 0.0));
  std::vector<double> seg(kStoiFrame);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int i = 0; i < kStoiFrame; ++i) seg[i] = x[f * kStoiHop + i] * w[i];
    const auto bins = rfft(seg);
    for (int j = 0; j < kStoiBands; ++j) {
      double acc = 0.0;
      for (int k = bands[j].first; k < bands[j].second; ++k)
        acc += std::norm(bins[static_cast<std::size_t>(k)]);
      env[f][j] = std::sqrt(acc);
    }
  }
  return env;
}

}  // namespace

double stoi(const Waveform& estimate, const Waveform& reference) {
  require_equal_lengths(estimate, reference, "stoi");
  if (estimate.duration_s() < 0.5)
    throw std::runtime_error("insufficient frames: need at least 0.5 s");

  auto ref = resample(reference.samples, reference.sample_rate_hz, kStoiRate);
  auto est = resample(estimate.samples, estimate.sample_rate_hz, kStoiRate);
  remove_silent_frames(ref, est);

  const auto x = band_envelopes(ref);  // clean
  const auto y = band_envelopes(est);  // degraded
  const std::size_t frames = x.size();
  if (frames < kStoiSegment)
    throw std::runtime_error("insufficient frames: got " +
                             std::to_string(frames) + " active frames, need " +
                             std::to_string(kStoiSegment));

  const double clip_gain = 1.0 + std::pow(10.0, -kStoiSdrClipDb / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (std::size_t m = kStoiSegment; m <= frames; ++m) {
    for (int j = 0; j < kStoiBands; ++j) {
      double xn = 0.0, yn = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        xs[i] = x[m - kStoiSegment + i][j];
        ys[i] = y[m - kStoiSegment + i][j];
        xn += xs[i] * xs[i];
        yn += ys[i] * ys[i];
      }
      const double alpha = std::sqrt(xn / (yn + 1e-300));
      for (int i = 0; i < kStoiSegment; ++i)
        ys[i] = std::min(ys[i] * alpha, xs[i] * clip_gain);

      double xm = 0.0, ym = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        xm += xs[i];
        ym += ys[i];
      }
      xm /= kStoiSegment;
      ym /= kStoiSegment;
      double num = 0.0, dx = 0.0, dy = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        num += (xs[i] - xm) * (ys[i] - ym);
        dx += (xs[i] - xm) * (xs[i] - xm);
        dy += (ys[i] - ym) * (ys[i] - ym);
      }
      const double denom = std::sqrt(dx * dy);
      total += denom > 1e-300 ? num / denom : 0.0;
      count += 1;
    }
  }
  return std::clamp(total / static_cast<double>(count), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Permutation search
// ---------------------------------------------------------------------------

PermutationResult best_permutation(const std::vector<Waveform>& estimates,
                                   const std::vector<Waveform>& references) {
  if (estimates.size() != references.size())
    throw std::runtime_error("best_permutation: channel count mismatch " +
                             std::to_string(estimates.size()) + " vs " +
                             std::to_string(references.size()));
  const int n = static_cast<int>(estimates.size());
  if (n == 0 || n > 4)
    throw std::runtime_error(
        "best_permutation: channel count must be in [1, 4]");

  std::vector<std::vector<double>> pair_score(
      n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      pair_score[i][j] = si_snr(estimates[i], references[j]);

  std::vector<int> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  const std::vector<int> identity = perm;
  double best_score = -1e300;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += pair_score[i][perm[i]];
    // Strict improvement wins; ties keep the earlier candidate. Identity is
    // visited first and later candidates arrive in lexicographic order, so
    // ties resolve identity-first then lexicographically.
    if (s > best_score) {
      best_score = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  PermutationResult result;
  result.permutation = best;
  result.total_si_snr_db = best_score;
  result.per_channel_si_snr_db.resize(n);
  for (int i = 0; i < n; ++i)
    result.per_channel_si_snr_db[i] = pair_score[i][best[i]];
  return result;
}

}  // namespace detsep
