// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_STFT_HPP_
#define DETSEP_STFT_HPP_

#include <complex>
#include <cstddef>
#include <vector>

namespace detsep {

// Analysis/synthesis grid shared by the separator and the detector:
// 256-sample sqrt-Hann frames, hop 128. The 129 rfft bins are pooled into
// 33 bands (groups of four, the Nyquist bin alone) for network features and
// mask prediction; masks are expanded back to bins for synthesis so the
// inverse stays exact.
struct StftConfig {
  int frame = 256;
  int hop = 128;
  int bins() const { return frame / 2 + 1; }   // 129
  int bands() const { return frame / 8 + 1; }  // 33
};

// Complex spectrogram, frames x bins, plus the bookkeeping needed to invert.
struct Spectrogram {
  StftConfig cfg;
  std::size_t signal_len = 0;  // original (unpadded) sample count
  std::vector<std::vector<std::complex<double>>> frames;
  std::size_t num_frames() const { return frames.size(); }
};

// Centered STFT: the signal is zero-padded by one hop on each side so that
// overlap-add reconstruction is exact over the full original length.
Spectrogram stft(const std::vector<double>& x, const StftConfig& cfg = {});

// Inverse of stft (sqrt-Hann on both sides, 50% overlap).
std::vector<double> istft(const Spectrogram& spec);

// First band index for each bin, 33 bands over 129 bins.
int bin_to_band(int bin, const StftConfig& cfg = {});

// The sqrt-Hann window used on both the analysis and synthesis side.
std::vector<double> stft_window(int frame);

// Log band-magnitude features, frames x bands: ln(mean |X| in band + 1e-6).
std::vector<std::vector<double>> log_band_features(const Spectrogram& spec);

// Uncentered framing used by the detector frontend; frame count is
// floor((len - frame)/hop) + 1. Throws if the signal is shorter than one
// frame.
std::vector<std::vector<double>> log_band_features_unpadded(
    const std::vector<double>& x, const StftConfig& cfg = {});

std::size_t unpadded_frame_count(std::size_t len, const StftConfig& cfg = {});

}  // namespace detsep

#endif  // DETSEP_STFT_HPP_
