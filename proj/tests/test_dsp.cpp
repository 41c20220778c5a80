// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "noisesim/core/rng.hpp"
#include "noisesim/dsp/fft.hpp"
#include "noisesim/dsp/stft.hpp"
#include "noisesim/dsp/wav.hpp"

using namespace noisesim;
using namespace noisesim::dsp;

namespace {

Waveform sine(double freq, double seconds, int sr = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  const int64_t n = static_cast<int64_t>(seconds * sr);
  w.samples.resize(n);
  for (int64_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / sr);
  return w;
}

Waveform noise(int64_t n, uint64_t seed, double amp = 0.3, int sr = 16000) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  Rng rng(seed);
  for (auto& s : w.samples) s = amp * (2.0 * rng.uniform() - 1.0);
  return w;
}

// Windowed DFT by direct summation; the independent oracle for stft.
double direct_dft_magnitude(const std::vector<double>& frame, int k) {
  const int n = static_cast<int>(frame.size());
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < n; ++i)
    acc += frame[i] * std::exp(std::complex<double>(0.0, -2.0 * M_PI * k * i / n));
  return std::abs(acc);
}

double interior_rel_l2(const std::vector<double>& a, const std::vector<double>& b, int skip) {
  double num = 0.0, den = 0.0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = skip; i + skip < n; ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / std::max(den, 1e-30));
}

}  // namespace

TEST_CASE("fft matches direct dft and inverts") {
  Rng rng(3);
  std::vector<std::complex<double>> a(256);
  for (auto& x : a) x = {rng.normal(), rng.normal()};
  auto orig = a;
  fft(a, false);
  // spot-check two bins against direct summation
  for (int k : {1, 100}) {
    std::complex<double> acc(0, 0);
    for (int i = 0; i < 256; ++i)
      acc += orig[i] * std::exp(std::complex<double>(0.0, -2.0 * M_PI * k * i / 256));
    CHECK(std::abs(a[k] - acc) < 1e-9);
  }
  fft(a, true);
  for (int i = 0; i < 256; ++i) CHECK(std::abs(a[i] - orig[i]) < 1e-12);
}

TEST_CASE("stft of silence is zero with 129 bins") {
  Waveform w;
  w.samples.assign(16000, 0.0);
  Spectrogram s = stft(w);
  CHECK(s.bins() == 129);
  CHECK(s.magnitude.maxCoeff() == 0.0);
}

TEST_CASE("stft frame count formula") {
  Waveform w = noise(2048, 1);
  Spectrogram s = stft(w);
  CHECK(s.frames() == 2048 / 128 + 1);  // 17
  CHECK(s.bins() == 129);
}

TEST_CASE("stft rejects empty input") {
  Waveform w;
  CHECK_THROWS_AS(stft(w), InvalidInput);
}

TEST_CASE("bin-centered sine concentrates energy and matches direct dft") {
  const int k = 10;
  const double freq = static_cast<double>(k) * 16000.0 / 256.0;
  Waveform w = sine(freq, 1.0);
  Spectrogram s = stft(w);

  // interior frames: energy in bins k-1..k+1 at least 90% of total
  for (int t = 4; t < s.frames() - 4; t += 7) {
    double local = 0.0, total = 0.0;
    for (int b = 0; b < s.bins(); ++b) {
      const double e = s.magnitude(b, t) * s.magnitude(b, t);
      total += e;
      if (std::abs(b - k) <= 1) local += e;
    }
    CHECK(local / total > 0.9);
  }

  // frame 4 against the direct windowed DFT
  std::vector<double> frame(256);
  const int64_t base = 4 * 128 - 128;
  for (int n = 0; n < 256; ++n) {
    const double win = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / 256));
    frame[n] = w.samples[base + n] * win;
  }
  for (int b : {k - 2, k, k + 3})
    CHECK(s.magnitude(b, 4) == doctest::Approx(direct_dft_magnitude(frame, b)).epsilon(1e-9));
}

TEST_CASE("istft round trip within 1e-3 interior") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL, 11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    Waveform w = noise(16000, seed);
    Waveform r = istft(stft(w));
    CHECK(interior_rel_l2(w.samples, r.samples, 256) < 1e-3);
  }
}

TEST_CASE("istft of zero magnitude is silence") {
  Waveform w = noise(4096, 9);
  Spectrogram s = stft(w);
  s.magnitude.setZero();
  Waveform r = istft(s);
  for (double x : r.samples) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("istft requires phase") {
  Waveform w = noise(4096, 10);
  Spectrogram s = stft(w);
  s.phase.reset();
  CHECK_THROWS_AS(istft(s), InvalidInput);
}

TEST_CASE("sine round trip preserves dominant frequency") {
  Waveform w = sine(1000.0, 1.0);
  Waveform r = istft(stft(w));
  Spectrogram s = stft(r);
  // pick the spectral peak of an interior frame
  int peak = 0;
  for (int b = 0; b < s.bins(); ++b)
    if (s.magnitude(b, 60) > s.magnitude(peak, 60)) peak = b;
  const double bin_freq = 16000.0 / 256.0;
  CHECK(std::abs(peak * bin_freq - 1000.0) <= bin_freq);
}

TEST_CASE("segment shapes, padding and reassembly") {
  Eigen::MatrixXd m(129, 300);
  Rng rng(4);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();

  auto segs = segment_matrix(m, 128, "utt");
  REQUIRE(segs.size() == 3);
  CHECK_FALSE(segs[0].padded_tail);
  CHECK_FALSE(segs[1].padded_tail);
  CHECK(segs[2].padded_tail);
  CHECK(segs[2].valid_frames == 44);
  // 84 zero-padded frames at the tail
  CHECK(segs[2].data.rightCols(84).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd m1(129, 128);
  m1.setRandom();
  auto one = segment_matrix(m1, 128, "utt");
  REQUIRE(one.size() == 1);
  CHECK_FALSE(one[0].padded_tail);

  Eigen::MatrixXd m2(129, 256);
  for (int i = 0; i < m2.size(); ++i) m2.data()[i] = rng.uniform();
  auto reassembled = reassemble(segment_matrix(m2, 128, "u"), 256);
  CHECK((reassembled - m2).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd bad(100, 256);
  CHECK_THROWS_AS(segment_matrix(bad, 128, "u"), ShapeError);
}

TEST_CASE("reconstruct_waveform identity, doubling, zero") {
  Waveform w = noise(16000, 21);
  Spectrogram s = stft(w);

  Waveform same = reconstruct_waveform(s, s);
  CHECK(interior_rel_l2(w.samples, same.samples, 256) < 1e-3);

  Spectrogram doubled = s;
  doubled.magnitude *= 2.0;
  Waveform loud = reconstruct_waveform(doubled, s);
  double rms_in = 0.0, rms_out = 0.0;
  for (size_t i = 256; i + 256 < same.samples.size(); ++i) {
    rms_in += same.samples[i] * same.samples[i];
    rms_out += loud.samples[i] * loud.samples[i];
  }
  CHECK(std::sqrt(rms_out / rms_in) == doctest::Approx(2.0).epsilon(0.05));

  Spectrogram zero = s;
  zero.magnitude.setZero();
  Waveform silent = reconstruct_waveform(zero, s);
  for (double x : silent.samples) CHECK(std::abs(x) < 1e-12);

  Spectrogram small = s;
  small.magnitude = s.magnitude.leftCols(10).eval();
  CHECK_THROWS_AS(reconstruct_waveform(small, s), ShapeError);
}

TEST_CASE("estimate_snr on constructed mixtures") {
  Waveform clean = sine(440.0, 1.0);
  Waveform unit = noise(clean.length(), 42);
  double e_clean = 0.0, e_noise = 0.0;
  for (int64_t i = 0; i < clean.length(); ++i) {
    e_clean += clean.samples[i] * clean.samples[i];
    e_noise += unit.samples[i] * unit.samples[i];
  }
  for (double d : {0.0, 5.0, 10.0, 15.0}) {
    const double scale = std::sqrt(e_clean / e_noise) * std::pow(10.0, -d / 20.0);
    Waveform noisy = clean;
    for (int64_t i = 0; i < clean.length(); ++i) noisy.samples[i] += scale * unit.samples[i];
    CHECK(estimate_snr(noisy, clean) == doctest::Approx(d).epsilon(1e-9));
  }
  CHECK(std::isinf(estimate_snr(clean, clean)));
  Waveform zeros;
  zeros.samples.assign(clean.samples.size(), 0.0);
  CHECK_THROWS_AS(estimate_snr(clean, zeros), InvalidInput);
}

TEST_CASE("unpaired snr estimate within 3 dB on duty-cycled mixtures") {
  const int sr = 16000;
  for (double d : {0.0, 5.0, 10.0}) {
    // tone bursts: 0.25 s on / 0.25 s off, 4 s total
    Waveform speech;
    speech.sample_rate = sr;
    speech.samples.assign(4 * sr, 0.0);
    for (int64_t i = 0; i < speech.length(); ++i) {
      const bool on = (i / (sr / 4)) % 2 == 0;
      if (on) speech.samples[i] = 0.4 * std::sin(2.0 * M_PI * 700.0 * i / sr);
    }
    Waveform unit = noise(speech.length(), 99, 1.0);
    double e_s = 0.0, e_n = 0.0;
    for (int64_t i = 0; i < speech.length(); ++i) {
      e_s += speech.samples[i] * speech.samples[i];
      e_n += unit.samples[i] * unit.samples[i];
    }
    const double scale = std::sqrt(e_s / e_n) * std::pow(10.0, -d / 20.0);
    Waveform mix = speech;
    for (int64_t i = 0; i < mix.length(); ++i) mix.samples[i] += scale * unit.samples[i];
    const double est = estimate_snr_unpaired(mix);
    CHECK(std::abs(est - d) <= 3.0);
  }
}

TEST_CASE("compression round trip and fitting") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(129, 64).cwiseAbs() * 3.0;
  Compression c = fit_log1p_compression({&m});
  Spectrogram s;
  s.magnitude = m;
  Spectrogram cs = compress(s, c);
  CHECK(cs.magnitude.minCoeff() >= -1e-12);
  CHECK(cs.magnitude.maxCoeff() <= 1.0 + 1e-12);
  Spectrogram back = decompress(cs);
  CHECK((back.magnitude - m).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("wav round trip pcm16 and float32") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "noisesim_wav_test";
  fs::create_directories(dir);

  Waveform w = noise(5000, 7, 0.8);
  const std::string p16 = (dir / "a16.wav").string();
  write_wav(p16, w, WavEncoding::kPcm16);
  Waveform r16 = read_wav(p16);
  REQUIRE(r16.samples.size() == w.samples.size());
  CHECK(r16.sample_rate == 16000);
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(r16.samples[i] - w.samples[i]) < 1.0 / 32000.0);

  const std::string p32 = (dir / "a32.wav").string();
  write_wav(p32, w, WavEncoding::kFloat32);
  Waveform r32 = read_wav(p32);
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(r32.samples[i] - w.samples[i]) < 1e-6);

  // corrupt file rejected
  const std::string bad = (dir / "bad.wav").string();
  {
    std::FILE* f = std::fopen(bad.c_str(), "wb");
    std::fwrite("not a wav", 1, 9, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_wav(bad), IoError);
  fs::remove_all(dir);
}

TEST_CASE("dsp purity: identical inputs give identical outputs") {
  Waveform w = noise(8192, 33);
  Spectrogram a = stft(w), b = stft(w);
  CHECK((a.magnitude - b.magnitude).cwiseAbs().maxCoeff() == 0.0);
  Waveform ra = istft(a), rb = istft(b);
  CHECK(ra.samples == rb.samples);
}
