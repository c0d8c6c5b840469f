// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DETSEP_FFT_HPP_
#define DETSEP_FFT_HPP_

#include <complex>
#include <vector>

namespace detsep {

// In-place radix-2 complex FFT. n must be a power of two. Hand-rolled rather
// than pulled from a library so that every run is bit-deterministic; the
// transform sizes used here are tiny (256/512).
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Real forward transform: n real samples -> n/2+1 complex bins,
// X[k] = sum_n x[n] exp(-i 2 pi k n / N).
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft for a Hermitian half-spectrum of size n/2+1; returns n
// real samples (1/N normalization).
std::vector<double> irfft(const std::vector<std::complex<double>>& bins,
                          std::size_t n);

}  // namespace detsep

#endif  // DETSEP_FFT_HPP_
