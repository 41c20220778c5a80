// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/dsp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "noisesim/dsp/fft.hpp"

namespace noisesim::dsp {

namespace {

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.n_fft);
  switch (cfg.window) {
    case WindowKind::kHannPeriodic:
      for (int n = 0; n < cfg.n_fft; ++n)
        w[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / cfg.n_fft));
      break;
  }
  return w;
}

// Reflection that keeps bouncing for indices far out of range.
int64_t reflect_far(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

}  // namespace

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  NS_CHECK(!w.samples.empty(), InvalidInput, "stft: empty waveform");
  const int64_t len = w.length();
  const int n_fft = cfg.n_fft, hop = cfg.hop, bins = cfg.bins();

  int64_t frames;
  int64_t start_offset;  // sample index of frame 0 relative to the input
  if (cfg.center_padding) {
    frames = len / hop + 1;
    start_offset = -n_fft / 2;
  } else {
    NS_CHECK(len >= n_fft, InvalidInput, "stft: input shorter than n_fft without centering");
    frames = (len - n_fft) / hop + 1;
    start_offset = 0;
  }

  const std::vector<double> win = make_window(cfg);
  Spectrogram out;
  out.config = cfg;
  out.compression = Compression{};
  out.magnitude.resize(bins, frames);
  out.phase.emplace(bins, frames);

  std::vector<std::complex<double>> buf(n_fft);
  for (int64_t t = 0; t < frames; ++t) {
    const int64_t base = start_offset + t * hop;
    for (int n = 0; n < n_fft; ++n) {
      int64_t i = base + n;
      if (i < 0 || i >= len) i = cfg.center_padding ? reflect_far(i, len) : i;
      const double x = (i >= 0 && i < len) ? w.samples[i] : 0.0;
      buf[n] = x * win[n];
    }
    fft(buf, false);
    for (int k = 0; k < bins; ++k) {
      out.magnitude(k, t) = std::abs(buf[k]);
      (*out.phase)(k, t) = std::arg(buf[k]);
    }
  }
  return out;
}

Waveform istft(const Spectrogram& s, int sample_rate) {
  const StftConfig& cfg = s.config;
  cfg.validate();
  NS_CHECK(s.phase.has_value(), InvalidInput, "istft: phase required");
  NS_CHECK(s.phase->rows() == s.magnitude.rows() && s.phase->cols() == s.magnitude.cols(),
           ShapeError, "istft: phase shape differs from magnitude");
  NS_CHECK(s.bins() == cfg.n_fft / 2 + 1, ShapeError,
           "istft: magnitude has " << s.bins() << " bins, config expects " << cfg.n_fft / 2 + 1);
  NS_CHECK(s.compression.kind == CompressionKind::kLinear, InvalidInput,
           "istft: magnitude must be in the linear domain (decompress first)");

  const int n_fft = cfg.n_fft, hop = cfg.hop, bins = cfg.bins();
  const int64_t frames = s.frames();
  const std::vector<double> win = make_window(cfg);

  const int64_t padded_len = (frames - 1) * hop + n_fft;
  std::vector<double> acc(padded_len, 0.0), wsum(padded_len, 0.0);
  std::vector<std::complex<double>> buf(n_fft);

  for (int64_t t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      const double m = s.magnitude(k, t);
      const double p = (*s.phase)(k, t);
      buf[k] = std::polar(m, p);
    }
    for (int k = bins; k < n_fft; ++k) buf[k] = std::conj(buf[n_fft - k]);
    fft(buf, true);
    const int64_t base = t * hop;
    for (int n = 0; n < n_fft; ++n) {
      acc[base + n] += buf[n].real() * win[n];
      wsum[base + n] += win[n] * win[n];
    }
  }

  for (int64_t i = 0; i < padded_len; ++i) {
    if (wsum[i] > 1e-11) acc[i] /= wsum[i];
  }

  Waveform out;
  out.sample_rate = sample_rate;
  if (cfg.center_padding) {
    const int64_t start = n_fft / 2;
    const int64_t out_len = (frames - 1) * hop;
    out.samples.assign(acc.begin() + start, acc.begin() + start + out_len);
  } else {
    out.samples = std::move(acc);
  }
  return out;
}

std::vector<SpectrogramSegment> segment_matrix(const Eigen::MatrixXd& magnitude, int width,
                                               const std::string& utterance_id) {
  NS_CHECK(magnitude.rows() == kSegmentBins, ShapeError,
           "segment: expected " << kSegmentBins << " bins, got " << magnitude.rows());
  NS_CHECK(width > 0, InvalidInput, "segment: width must be positive");
  const int total = static_cast<int>(magnitude.cols());
  NS_CHECK(total > 0, InvalidInput, "segment: empty spectrogram");

  std::vector<SpectrogramSegment> segs;
  for (int off = 0; off < total; off += width) {
    SpectrogramSegment seg;
    seg.utterance_id = utterance_id;
    seg.frame_offset = off;
    const int valid = std::min(width, total - off);
    seg.valid_frames = valid;
    seg.padded_tail = valid < width;
    seg.data = Eigen::MatrixXd::Zero(kSegmentBins, width);
    seg.data.leftCols(valid) = magnitude.middleCols(off, valid);
    segs.push_back(std::move(seg));
  }
  return segs;
}

std::vector<SpectrogramSegment> segment(const Spectrogram& s, int width,
                                        const std::string& utterance_id) {
  return segment_matrix(s.magnitude, width, utterance_id);
}

Eigen::MatrixXd reassemble(const std::vector<SpectrogramSegment>& segs, int total_frames) {
  NS_CHECK(!segs.empty(), InvalidInput, "reassemble: no segments");
  Eigen::MatrixXd out(kSegmentBins, total_frames);
  int covered = 0;
  for (const auto& seg : segs) {
    NS_CHECK(seg.data.rows() == kSegmentBins, ShapeError, "reassemble: bad segment bin count");
    const int take = std::min<int>(seg.valid_frames, total_frames - seg.frame_offset);
    NS_CHECK(take >= 0, InvalidInput, "reassemble: segment beyond total_frames");
    out.middleCols(seg.frame_offset, take) = seg.data.leftCols(take);
    covered += take;
  }
  NS_CHECK(covered == total_frames, InvalidInput,
           "reassemble: segments cover " << covered << " of " << total_frames << " frames");
  return out;
}

Waveform reconstruct_waveform(const Spectrogram& simulated_magnitude,
                              const Spectrogram& source_phase, int sample_rate) {
  NS_CHECK(source_phase.phase.has_value(), InvalidInput, "reconstruct: source phase required");
  NS_CHECK(simulated_magnitude.magnitude.rows() == source_phase.magnitude.rows() &&
               simulated_magnitude.magnitude.cols() == source_phase.magnitude.cols(),
           ShapeError, "reconstruct: magnitude/phase shape mismatch");

  Spectrogram s;
  s.config = source_phase.config;
  s.compression = Compression{};
  s.magnitude = simulated_magnitude.magnitude.unaryExpr(
      [&](double c) { return simulated_magnitude.compression.invert(c); });
  s.phase = *source_phase.phase;
  return istft(s, sample_rate);
}

double estimate_snr(const Waveform& noisy, const Waveform& clean) {
  NS_CHECK(noisy.samples.size() == clean.samples.size(), InvalidInput,
           "estimate_snr: length mismatch " << noisy.samples.size() << " vs "
                                            << clean.samples.size());
  NS_CHECK(!clean.samples.empty(), InvalidInput, "estimate_snr: empty input");
  double e_clean = 0.0, e_res = 0.0;
  for (size_t i = 0; i < clean.samples.size(); ++i) {
    e_clean += clean.samples[i] * clean.samples[i];
    const double r = noisy.samples[i] - clean.samples[i];
    e_res += r * r;
  }
  NS_CHECK(e_clean > 0.0, InvalidInput, "estimate_snr: clean reference has zero energy");
  if (e_res == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(e_clean / e_res);
}

double estimate_snr_unpaired(const Waveform& noisy, int frame_len, int frame_hop) {
  NS_CHECK(noisy.length() >= frame_len, InvalidInput, "estimate_snr_unpaired: input too short");
  std::vector<double> powers;
  for (int64_t i = 0; i + frame_len <= noisy.length(); i += frame_hop) {
    double p = 0.0;
    for (int n = 0; n < frame_len; ++n) p += noisy.samples[i + n] * noisy.samples[i + n];
    powers.push_back(p / frame_len);
  }
  std::sort(powers.begin(), powers.end());
  // Noise floor from the lowest decile of frame powers.
  const size_t k = std::max<size_t>(1, powers.size() / 10);
  double noise_power = 0.0;
  for (size_t i = 0; i < k; ++i) noise_power += powers[i];
  noise_power /= k;
  double total_power = 0.0;
  for (double p : powers) total_power += p;
  total_power /= powers.size();

  const double tiny = 1e-12;
  const double signal_power = std::max(total_power - noise_power, tiny);
  return 10.0 * std::log10(signal_power / std::max(noise_power, tiny));
}

Compression fit_log1p_compression(const std::vector<const Eigen::MatrixXd*>& magnitudes) {
  NS_CHECK(!magnitudes.empty(), InvalidInput, "fit_log1p_compression: no spectrograms");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* m : magnitudes) {
    lo = std::min(lo, std::log1p(m->minCoeff()));
    hi = std::max(hi, std::log1p(m->maxCoeff()));
  }
  if (hi - lo < 1e-9) {
    NS_WARN << "fit_log1p_compression: degenerate dynamic range, widening";
    hi = lo + 1.0;
  }
  return Compression{CompressionKind::kLog1pMinMax, lo, hi};
}

Spectrogram compress(const Spectrogram& s, const Compression& c) {
  NS_CHECK(s.compression.kind == CompressionKind::kLinear, InvalidInput,
           "compress: spectrogram already compressed");
  Spectrogram out = s;
  out.magnitude = s.magnitude.unaryExpr([&](double m) { return c.apply(m); });
  out.compression = c;
  return out;
}

Spectrogram decompress(const Spectrogram& s) {
  Spectrogram out = s;
  out.magnitude = s.magnitude.unaryExpr([&](double m) { return s.compression.invert(m); });
  out.compression = Compression{};
  return out;
}

}  // namespace noisesim::dsp
