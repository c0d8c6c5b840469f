// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_MIXING_HPP_
#define DETSEP_MIXING_HPP_

#include <optional>
#include <vector>

#include "detsep/wave.hpp"

namespace detsep {

// Returns g * signal with g chosen so that
// 10 log10(P(reference) / P(g * signal)) == snr_db, where P is the mean
// squared amplitude over the overlapped (common-length) region.
Waveform scale_to_snr(const Waveform& signal, const Waveform& reference,
                      double snr_db);

// 10 log10(P(reference) / P(signal)) over the overlapped region.
double measure_snr_db(const Waveform& reference, const Waveform& signal);

struct Mixdown {
  Waveform mixture;
  // Joint rescale applied when the raw sum clipped (peak brought to 0.9);
  // callers must apply the same gain to every stored reference so that the
  // references keep summing to the mixture.
  double gain = 1.0;
};

// Elementwise sum of equal-length sources plus optional noise.
Mixdown mix(const std::vector<Waveform>& sources,
            const std::optional<Waveform>& noise = std::nullopt);

}  // namespace detsep

#endif  // DETSEP_MIXING_HPP_
