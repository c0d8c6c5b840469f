// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_SYNTH_HPP_
#define DETSEP_SYNTH_HPP_

#include <cstdint>

#include "detsep/wave.hpp"

namespace detsep {

// Fundamental frequency a given speaker seed maps to, in [90, 300] Hz.
double speaker_f0_hz(uint64_t speaker_seed);

// Deterministic pseudo-speech: a harmonic complex at the speaker's
// fundamental with formant-like spectral shaping, slow amplitude envelope
// and pitch vibrato. Same (seed, duration, rate) is bit-identical.
Waveform synth_speaker(uint64_t speaker_seed, double duration_s,
                       int sample_rate_hz);

// Keyword template: a 0.4 s melodic pattern of three rising tone bursts.
// The seed perturbs gain by up to +-5% and time-warps the burst envelope by
// up to +-2%; the carrier phase is shared across variants so any two
// variants stay strongly correlated and a detector can learn the class.
Waveform synth_keyword(uint64_t variant_seed, int sample_rate_hz);

// Low-passed noise standing in for ambient recordings.
Waveform synth_ambient_noise(uint64_t seed, double duration_s,
                             int sample_rate_hz);

}  // namespace detsep

#endif  // DETSEP_SYNTH_HPP_
