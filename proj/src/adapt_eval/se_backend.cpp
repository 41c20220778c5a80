// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/adapt_eval/se_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "noisesim/core/serialize.hpp"
#include "noisesim/dsp/wav.hpp"

namespace noisesim::eval {

namespace {
constexpr int kLevels = 4;
constexpr int kKernel = 4;
constexpr int kLossNfft = 256;
constexpr int kLossHop = 128;

Tensor waveform_to_tensor(const dsp::Waveform& w) {
  return Tensor::from_vector({1, static_cast<int>(w.samples.size())}, w.samples);
}
}  // namespace

DeskSeBackend::DeskSeBackend(const DeskSeConfig& cfg) : cfg_(cfg) {
  Rng rng = rng_stream(cfg.seed, "se_init");
  const int c = cfg.base_channels;
  const int ch[kLevels + 1] = {1, c, 2 * c, 4 * c, 8 * c};
  for (int i = 0; i < kLevels; ++i)
    // left-only padding keeps each stride-2 frame inside the past
    enc_.push_back(models::Conv1dLayer::create(ch[i], ch[i + 1], kKernel, 2, 2, 0, rng));
  for (int i = kLevels; i >= 1; --i) {
    const double std = i == 1 ? 0.0 : models::kWeightInitStd;  // identity start
    dec_.push_back(models::ConvTranspose1dLayer::create(ch[i], ch[i - 1], kKernel, 2, rng, std));
  }

  // windowed DFT kernels (constants) for the spectral loss
  std::vector<double> basis(2 * (kLossNfft / 2 + 1) * kLossNfft, 0.0);
  const int bins = kLossNfft / 2 + 1;
  for (int k = 0; k < bins; ++k)
    for (int n = 0; n < kLossNfft; ++n) {
      const double win = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / kLossNfft));
      const double ang = 2.0 * M_PI * k * n / kLossNfft;
      basis[static_cast<size_t>(k) * kLossNfft + n] = std::cos(ang) * win;
      basis[static_cast<size_t>(bins + k) * kLossNfft + n] = -std::sin(ang) * win;
    }
  dft_basis_ = Tensor::from_vector({2 * bins, 1, kLossNfft}, std::move(basis));
  opt_ = train::Adam(train::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
}

Tensor DeskSeBackend::forward(const Tensor& x) const {
  std::vector<Tensor> skips;
  skips.push_back(x);
  Tensor h = x;
  for (int i = 0; i < kLevels; ++i) {
    h = relu(enc_[i].forward(h));
    skips.push_back(h);
  }
  for (int i = 0; i < kLevels; ++i) {
    const Tensor& skip = skips[kLevels - 1 - i];
    Tensor up = dec_[i].forward(h);
    // one-frame delay realigns the transposed conv to zero lookahead
    up = shift_right_time(up, 1);
    up = crop_or_pad_time(up, skip.dim(1));
    h = add(up, skip);
    if (i + 1 < kLevels) h = relu(h);
  }
  return h;  // includes the global residual via the level-0 skip
}

Tensor DeskSeBackend::stft_magnitude(const Tensor& x) const {
  Tensor ri = conv1d(x, dft_basis_, Tensor(), kLossHop, 0, 0);
  return complex_magnitude(ri);
}

dsp::Waveform DeskSeBackend::enhance(const dsp::Waveform& noisy) {
  NS_CHECK(!noisy.samples.empty(), InvalidInput, "enhance: empty input");
  NoGradGuard ng;
  Tensor out = forward(waveform_to_tensor(noisy));
  dsp::Waveform w;
  w.sample_rate = noisy.sample_rate;
  w.samples.assign(out.data(), out.data() + out.size());
  return w;
}

double DeskSeBackend::train_step(const dsp::Waveform& noisy, const dsp::Waveform& clean) {
  NS_CHECK(noisy.samples.size() == clean.samples.size(), InvalidInput,
           "train_step: noisy/clean length mismatch");
  ParamMap pm = params();
  pm.set_requires_grad(true);
  Tensor pred = forward(waveform_to_tensor(noisy));
  Tensor target = waveform_to_tensor(clean);
  Tensor loss = l1_loss(pred, target);
  if (cfg_.stft_loss_weight > 0.0 && clean.samples.size() >= kLossNfft) {
    Tensor spec_loss = l1_loss(stft_magnitude(pred), stft_magnitude(target));
    loss = add(loss, mul_scalar(spec_loss, cfg_.stft_loss_weight));
  }
  pm.zero_grad();
  loss.backward();
  opt_.step(pm);
  return loss.item();
}

ParamMap DeskSeBackend::params() const {
  ParamMap pm;
  for (int i = 0; i < kLevels; ++i) enc_[i].collect(pm, "enc" + std::to_string(i));
  for (int i = 0; i < kLevels; ++i) dec_[i].collect(pm, "dec" + std::to_string(i));
  return pm;
}

void DeskSeBackend::save(const std::string& path) const {
  Archive ar;
  ar.header["kind"] = "se_backend";
  ar.header["arch"] = "causal_unet1d";
  ar.header["base_channels"] = cfg_.base_channels;
  ar.header["lr"] = cfg_.lr;
  ar.header["stft_loss_weight"] = cfg_.stft_loss_weight;
  ar.header["seed"] = cfg_.seed;
  store_params(ar, params());
  opt_.store(ar, "opt.");
  save_archive(path, ar);
}

std::unique_ptr<DeskSeBackend> DeskSeBackend::load(const std::string& path) {
  Archive ar = load_archive(path);
  NS_CHECK(ar.header.value("kind", "") == "se_backend", IoError,
           "DeskSeBackend::load: " << path << " is not an enhancement checkpoint");
  NS_CHECK(ar.header.value("arch", "") == "causal_unet1d", IoError,
           "DeskSeBackend::load: unsupported arch in " << path);
  DeskSeConfig cfg;
  cfg.base_channels = ar.header.at("base_channels").get<int>();
  cfg.lr = ar.header.at("lr").get<double>();
  cfg.stft_loss_weight = ar.header.at("stft_loss_weight").get<double>();
  cfg.seed = ar.header.at("seed").get<uint64_t>();
  auto backend = std::make_unique<DeskSeBackend>(cfg);
  ParamMap pm = backend->params();
  load_params(ar, pm);
  backend->opt_.load(ar, "opt.");
  return backend;
}

ExecSeBackend::ExecSeBackend(std::string executable, bool declared_causal)
    : executable_(std::move(executable)), declared_causal_(declared_causal) {
  NS_CHECK(std::filesystem::exists(executable_), ConfigError,
           "ExecSeBackend: no such executable: " << executable_);
}

dsp::Waveform ExecSeBackend::enhance(const dsp::Waveform& noisy) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("noisesim_se_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string in = (dir / "in.wav").string(), out = (dir / "out.wav").string();
  dsp::write_wav(in, noisy, dsp::WavEncoding::kFloat32);
  const std::string cmd = "'" + executable_ + "' '" + in + "' '" + out + "'";
  const int rc = std::system(cmd.c_str());
  NS_CHECK(rc == 0, IoError, "ExecSeBackend: '" << cmd << "' exited with " << rc);
  dsp::Waveform w = dsp::read_wav(out);
  fs::remove_all(dir);
  return w;
}

double ExecSeBackend::train_step(const dsp::Waveform&, const dsp::Waveform&) {
  throw ConfigError("ExecSeBackend: external backends are inference-only");
}

void ExecSeBackend::save(const std::string&) const {
  throw ConfigError("ExecSeBackend: external backends have no checkpoint to save");
}

}  // namespace noisesim::eval
