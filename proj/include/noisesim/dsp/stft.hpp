// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_DSP_STFT_HPP_
#define NOISESIM_DSP_STFT_HPP_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "noisesim/core/error.hpp"

namespace noisesim::dsp {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  int64_t length() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WindowKind { kHannPeriodic };

struct StftConfig {
  int n_fft = 256;
  int hop = 128;
  WindowKind window = WindowKind::kHannPeriodic;
  bool center_padding = true;

  int bins() const { return n_fft / 2 + 1; }
  void validate() const {
    NS_CHECK(n_fft > 0 && (n_fft & (n_fft - 1)) == 0, InvalidInput,
             "stft: n_fft must be a positive power of two");
    NS_CHECK(hop > 0 && hop <= n_fft, InvalidInput, "stft: requires 0 < hop <= n_fft");
  }
};

enum class CompressionKind { kLinear, kLog1pMinMax };

// Magnitude-domain tag. kLog1pMinMax maps log1p(|S|) affinely onto [0,1]
// with corpus-level constants; the constants travel with checkpoints.
struct Compression {
  CompressionKind kind = CompressionKind::kLinear;
  double lo = 0.0;
  double hi = 1.0;

  double apply(double mag) const {
    if (kind == CompressionKind::kLinear) return mag;
    return (std::log1p(mag) - lo) / (hi - lo);
  }
  double invert(double c) const {
    if (kind == CompressionKind::kLinear) return c;
    return std::expm1(c * (hi - lo) + lo);
  }
};

struct Spectrogram {
  Eigen::MatrixXd magnitude;              // bins x frames
  std::optional<Eigen::MatrixXd> phase;   // radians, same shape
  StftConfig config;
  Compression compression;

  int bins() const { return static_cast<int>(magnitude.rows()); }
  int frames() const { return static_cast<int>(magnitude.cols()); }
};

inline constexpr int kSegmentBins = 129;
inline constexpr int kSegmentFrames = 128;

struct SpectrogramSegment {
  Eigen::MatrixXd data;  // kSegmentBins x width
  std::string utterance_id;
  int frame_offset = 0;
  bool padded_tail = false;
  int valid_frames = kSegmentFrames;
};

// Magnitude+phase analysis. Frame count with center padding is
// floor(len/hop) + 1.
Spectrogram stft(const Waveform& w, const StftConfig& cfg = {});

// Weighted overlap-add synthesis; requires phase.
Waveform istft(const Spectrogram& s, int sample_rate = 16000);

// Non-overlapping windows of `width` frames; the final partial window is
// zero-padded and flagged. Input must have kSegmentBins rows.
std::vector<SpectrogramSegment> segment(const Spectrogram& s, int width = kSegmentFrames,
                                        const std::string& utterance_id = "");
std::vector<SpectrogramSegment> segment_matrix(const Eigen::MatrixXd& magnitude,
                                               int width = kSegmentFrames,
                                               const std::string& utterance_id = "");

// Concatenates segments back (dropping tail padding) into bins x total_frames.
Eigen::MatrixXd reassemble(const std::vector<SpectrogramSegment>& segs, int total_frames);

// Combines a simulated magnitude with the source utterance's phase,
// inverting the magnitude compression first.
Waveform reconstruct_waveform(const Spectrogram& simulated_magnitude,
                              const Spectrogram& source_phase, int sample_rate = 16000);

// 10*log10(||clean||^2 / ||noisy - clean||^2); +inf when the residual is zero.
double estimate_snr(const Waveform& noisy, const Waveform& clean);

// Reference-free estimate from frame-energy percentiles (noise-floor tracking).
double estimate_snr_unpaired(const Waveform& noisy, int frame_len = 512, int frame_hop = 256);

// Fits log1p min-max constants over a set of (linear) magnitude spectrograms.
Compression fit_log1p_compression(const std::vector<const Eigen::MatrixXd*>& magnitudes);

// Applies / inverts compression on a whole spectrogram.
Spectrogram compress(const Spectrogram& s, const Compression& c);
Spectrogram decompress(const Spectrogram& s);

}  // namespace noisesim::dsp

#endif  // NOISESIM_DSP_STFT_HPP_
