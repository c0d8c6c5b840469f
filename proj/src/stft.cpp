// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/stft.hpp"

#include <cmath>
#include <stdexcept>

#include "detsep/fft.hpp"

namespace detsep {

std::vector<double> stft_window(int frame) {
  std::vector<double> w(frame);
  for (int i = 0; i < frame; ++i) {
    double h = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / frame));  // periodic
    w[i] = std::sqrt(h);
  }
  return w;
}

namespace {
std::vector<double> sqrt_hann(int n) { return stft_window(n); }
}  // namespace

Spectrogram stft(const std::vector<double>& x, const StftConfig& cfg) {
  if (x.empty()) throw std::runtime_error("stft: empty signal");
  const int frame = cfg.frame, hop = cfg.hop;
  const auto win = sqrt_hann(frame);

  // Pad one hop of zeros at each end, then extend so frames tile the signal.
  const std::size_t padded = x.size() + 2 * static_cast<std::size_t>(hop);
  std::size_t t = 0;
  while (t * hop + frame < padded) ++t;
  const std::size_t total = t * hop + frame;

  std::vector<double> buf(total, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i + hop] = x[i];

  Spectrogram spec;
  spec.cfg = cfg;
  spec.signal_len = x.size();
  const std::size_t num_frames = (total - frame) / hop + 1;
  spec.frames.reserve(num_frames);
  std::vector<double> seg(frame);
  for (std::size_t f = 0; f < num_frames; ++f) {
    for (int i = 0; i < frame; ++i) seg[i] = buf[f * hop + i] * win[i];
    spec.frames.push_back(rfft(seg));
  }
  return spec;
}

std::vector<double> istft(const Spectrogram& spec) {
  const int frame = spec.cfg.frame, hop = spec.cfg.hop;
  const auto win = sqrt_hann(frame);
  const std::size_t total = (spec.frames.size() - 1) * hop + frame;
  std::vector<double> buf(total, 0.0);
  for (std::size_t f = 0; f < spec.frames.size(); ++f) {
    auto seg = irfft(spec.frames[f], frame);
    for (int i = 0; i < frame; ++i) buf[f * hop + i] += seg[i] * win[i];
  }
  std::vector<double> out(spec.signal_len);
  for (std::size_t i = 0; i < spec.signal_len; ++i) out[i] = buf[i + hop];
  return out;
}

int bin_to_band(int bin, const StftConfig& cfg) {
  const int last = cfg.bins() - 1;
  if (bin == last) return cfg.bands() - 1;
  return bin / 4;
}

static std::vector<double> band_feature_row(
    const std::vector<std::complex<double>>& bins, const StftConfig& cfg) {
  std::vector<double> mag(cfg.bands(), 0.0);
  std::vector<int> count(cfg.bands(), 0);
  for (int k = 0; k < cfg.bins(); ++k) {
    int b = bin_to_band(k, cfg);
    mag[b] += std::abs(bins[k]);
    count[b] += 1;
  }
  for (int b = 0; b < cfg.bands(); ++b)
    mag[b] = std::log(mag[b] / count[b] + 1e-6);
  return mag;
}

std::vector<std::vector<double>> log_band_features(const Spectrogram& spec) {
  std::vector<std::vector<double>> rows;
  rows.reserve(spec.frames.size());
  for (const auto& f : spec.frames) rows.push_back(band_feature_row(f, spec.cfg));
  return rows;
}

std::size_t unpadded_frame_count(std::size_t len, const StftConfig& cfg) {
  if (len < static_cast<std::size_t>(cfg.frame))
    throw std::runtime_error("too short: need at least " +
                             std::to_string(cfg.frame) + " samples");
  return (len - cfg.frame) / cfg.hop + 1;
}

std::vector<std::vector<double>> log_band_features_unpadded(
    const std::vector<double>& x, const StftConfig& cfg) {
  const std::size_t t = unpadded_frame_count(x.size(), cfg);
  const auto win = sqrt_hann(cfg.frame);
  std::vector<std::vector<double>> rows;
  rows.reserve(t);
  std::vector<double> seg(cfg.frame);
  for (std::size_t f = 0; f < t; ++f) {
    for (int i = 0; i < cfg.frame; ++i) seg[i] = x[f * cfg.hop + i] * win[i];
    rows.push_back(band_feature_row(rfft(seg), cfg));
  }
  return rows;
}

}  // namespace detsep
