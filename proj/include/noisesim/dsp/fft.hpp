// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_DSP_FFT_HPP_
#define NOISESIM_DSP_FFT_HPP_

#include <complex>
#include <vector>

namespace noisesim::dsp {

// In-place iterative radix-2 FFT. Size must be a power of two.
// inverse=true applies the 1/N scale.
void fft(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace noisesim::dsp

#endif  // NOISESIM_DSP_FFT_HPP_
