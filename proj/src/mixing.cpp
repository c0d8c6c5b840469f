// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace detsep {

namespace {

double overlap_power(const Waveform& w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w.samples[i] * w.samples[i];
  return acc / static_cast<double>(n);
}

}  // namespace

Waveform scale_to_snr(const Waveform& signal, const Waveform& reference,
                      double snr_db) {
  if (signal.sample_rate_hz != reference.sample_rate_hz)
    throw std::runtime_error("scale_to_snr: sample rate mismatch");
  const std::size_t n = std::min(signal.samples.size(),
                                 reference.samples.size());
  if (n == 0) throw std::runtime_error("scale_to_snr: empty input");
  const double p_sig = overlap_power(signal, n);
  const double p_ref = overlap_power(reference, n);
  if (p_sig <= 0.0 || p_ref <= 0.0)
    throw std::runtime_error("degenerate energy");
  const double g = std::sqrt(p_ref / (p_sig * std::pow(10.0, snr_db / 10.0)));
  Waveform out = signal;
  for (auto& v : out.samples) v *= g;
  return out;
}

double measure_snr_db(const Waveform& reference, const Waveform& signal) {
  const std::size_t n = std::min(signal.samples.size(),
                                 reference.samples.size());
  if (n == 0) throw std::runtime_error("measure_snr_db: empty input");
  const double p_sig = overlap_power(signal, n);
  const double p_ref = overlap_power(reference, n);
  if (p_sig <= 0.0 || p_ref <= 0.0)
    throw std::runtime_error("degenerate energy");
  return 10.0 * std::log10(p_ref / p_sig);
}

Mixdown mix(const std::vector<Waveform>& sources,
            const std::optional<Waveform>& noise) {
  if (sources.empty()) throw std::runtime_error("mix: empty source list");
  const std::size_t n = sources[0].samples.size();
  const int rate = sources[0].sample_rate_hz;
  for (const auto& s : sources)
    if (s.samples.size() != n || s.sample_rate_hz != rate)
      throw std::runtime_error("mix: sources must share length and rate");
  if (noise && (noise->samples.size() != n || noise->sample_rate_hz != rate))
    throw std::runtime_error("mix: noise must share length and rate");

  Mixdown out;
  out.mixture.sample_rate_hz = rate;
  out.mixture.samples.assign(n, 0.0);
  for (const auto& s : sources)
    for (std::size_t i = 0; i < n; ++i) out.mixture.samples[i] += s.samples[i];
  if (noise)
    for (std::size_t i = 0; i < n; ++i)
      out.mixture.samples[i] += noise->samples[i];

  const double peak = peak_abs(out.mixture);
  if (peak > 1.0) {
    out.gain = 0.9 / peak;
    for (auto& v : out.mixture.samples) v *= out.gain;
  }
  return out;
}

}  // namespace detsep
