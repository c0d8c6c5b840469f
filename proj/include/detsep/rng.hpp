// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_RNG_HPP_
#define DETSEP_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace detsep {

// SplitMix64 stream. Hand-rolled (no <random> distributions) so corpora and
// training trajectories are bit-identical across platforms and standard
// library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n
  // used here and keeps the stream consumption at one draw per call.
  uint64_t uniform_int(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call
  // (no cached spare, so streams stay splittable).
  double gauss() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_;
};

// Independent per-entry seed for corpus entry `index`: the simulation result
// for one entry depends only on (seed, index), never on processing order.
inline uint64_t substream_seed(uint64_t seed, uint64_t index) {
  Rng r(seed ^ (0x9E3779B97F4A7C15ull * (index + 1)));
  return r.next_u64();
}

}  // namespace detsep

#endif  // DETSEP_RNG_HPP_
