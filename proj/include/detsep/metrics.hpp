// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_METRICS_HPP_
#define DETSEP_METRICS_HPP_

#include <vector>

#include "detsep/wave.hpp"

namespace detsep {

// Scale-invariant SNR in dB, unclipped. Both signals are mean-subtracted,
// the estimate is projected onto the reference (alpha = <e,r>/<r,r>), and
// the value is 10 log10((|target|^2 + eps) / (|residual|^2 + eps)) with
// eps = 1e-8. Zero-energy reference raises "degenerate reference".
double si_snr(const Waveform& estimate, const Waveform& reference);

// Reporting variant, clipped to [-30, +30] dB. The unclipped value feeds the
// training loss; reports use this one.
double si_snr_clipped(const Waveform& estimate, const Waveform& reference);

// si_snr(estimate, reference) - si_snr(mixture, reference).
double si_snr_improvement(const Waveform& estimate, const Waveform& reference,
                          const Waveform& mixture);

// Short-time objective intelligibility in [0, 1]. Both signals are
// resampled to 10 kHz (64-tap windowed sinc), silent frames more than 40 dB
// below the peak reference frame are dropped, then band envelopes from a
// 512-point Hann STFT with hop 256 are compared over 15 one-third-octave
// bands (from 150 Hz) in 30-frame segments with per-segment normalization
// and clipping at -13 dB SDR. Requires enough frames for one segment.
double stoi(const Waveform& estimate, const Waveform& reference);

struct PermutationResult {
  std::vector<int> permutation;  // estimate index -> reference index
  double total_si_snr_db = 0.0;
  std::vector<double> per_channel_si_snr_db;  // under the chosen assignment
};

// Exhaustive best-assignment search maximizing summed si_snr; N <= 4.
// Ties break toward the identity permutation, then lexicographically.
PermutationResult best_permutation(const std::vector<Waveform>& estimates,
                                   const std::vector<Waveform>& references);

// Per-utterance separation report used by the evaluation harness.
struct MetricReport {
  PermutationResult permutation;
  double si_snr_improvement_db = 0.0;
  std::vector<double> stoi_per_channel;
};

}  // namespace detsep

#endif  // DETSEP_METRICS_HPP_
