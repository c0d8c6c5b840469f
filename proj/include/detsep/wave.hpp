// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_WAVE_HPP_
#define DETSEP_WAVE_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace detsep {

// Mono sampled audio. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; everything downstream (mixing, metrics, models) runs on this.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 8000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

// RIFF/WAVE reader. Accepts mono PCM16 or IEEE float32; anything else
// (multichannel, other codecs, truncated files) raises a descriptive error.
Waveform read_wav(const std::string& path);

// Writes mono RIFF/WAVE. Float32 round-trips the float-representable sample
// values exactly; PCM16 quantizes to within 1/32768.
void write_wav(const std::string& path, const Waveform& w,
               WavEncoding enc = WavEncoding::kFloat32);

double peak_abs(const Waveform& w);
double mean_power(const Waveform& w);

}  // namespace detsep

#endif  // DETSEP_WAVE_HPP_
