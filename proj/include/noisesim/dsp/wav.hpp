// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_DSP_WAV_HPP_
#define NOISESIM_DSP_WAV_HPP_

#include <string>

#include "noisesim/dsp/stft.hpp"

namespace noisesim::dsp {

// Reads mono 16-bit PCM or 32-bit float WAV.
Waveform read_wav(const std::string& path);

enum class WavEncoding { kPcm16, kFloat32 };

void write_wav(const std::string& path, const Waveform& w,
               WavEncoding enc = WavEncoding::kPcm16);

}  // namespace noisesim::dsp

#endif  // NOISESIM_DSP_WAV_HPP_
