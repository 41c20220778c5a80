// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_ADAPT_EVAL_SE_BACKEND_HPP_
#define NOISESIM_ADAPT_EVAL_SE_BACKEND_HPP_

#include <memory>
#include <string>
#include <vector>

#include "noisesim/dsp/stft.hpp"
#include "noisesim/models/modules.hpp"
#include "noisesim/train/adam.hpp"

namespace noisesim::eval {

// Pluggable speech-enhancement model. Causal backends must not use future
// context: enhancing a truncated input reproduces the truncated prefix of
// the full-input output.
class SeBackend {
 public:
  virtual ~SeBackend() = default;
  virtual dsp::Waveform enhance(const dsp::Waveform& noisy) = 0;
  virtual double train_step(const dsp::Waveform& noisy, const dsp::Waveform& clean) = 0;
  virtual bool trainable() const = 0;
  virtual bool causal() const = 0;
  virtual void save(const std::string& path) const = 0;
};

struct DeskSeConfig {
  int base_channels = 16;  // doubled at each of the four encoder levels
  double lr = 1e-3;
  double stft_loss_weight = 0.5;
  uint64_t seed = 0;
};

// Desk-scale causal waveform U-Net: four stride-2 causal encoder
// convolutions, four transposed-convolution decoder levels realigned to
// zero lookahead, additive skip connections, and a global residual path
// (the untrained model is the identity). Trains with L1 waveform loss plus
// a single-resolution STFT magnitude loss.
class DeskSeBackend : public SeBackend {
 public:
  explicit DeskSeBackend(const DeskSeConfig& cfg = {});

  dsp::Waveform enhance(const dsp::Waveform& noisy) override;
  double train_step(const dsp::Waveform& noisy, const dsp::Waveform& clean) override;
  bool trainable() const override { return true; }
  bool causal() const override { return true; }
  void save(const std::string& path) const override;

  static std::unique_ptr<DeskSeBackend> load(const std::string& path);
  const DeskSeConfig& config() const { return cfg_; }

 private:
  Tensor forward(const Tensor& x) const;  // [1,T] -> [1,T]
  Tensor stft_magnitude(const Tensor& x) const;
  ParamMap params() const;

  DeskSeConfig cfg_;
  std::vector<models::Conv1dLayer> enc_;
  std::vector<models::ConvTranspose1dLayer> dec_;
  Tensor dft_basis_;  // fixed [2F, 1, n_fft] analysis kernels for the loss
  train::Adam opt_;
};

// External enhancement tool driven per utterance: `exe <in.wav> <out.wav>`.
// Inference only; training requests raise ConfigError.
class ExecSeBackend : public SeBackend {
 public:
  explicit ExecSeBackend(std::string executable, bool declared_causal = false);

  dsp::Waveform enhance(const dsp::Waveform& noisy) override;
  double train_step(const dsp::Waveform&, const dsp::Waveform&) override;
  bool trainable() const override { return false; }
  bool causal() const override { return declared_causal_; }
  void save(const std::string&) const override;

 private:
  std::string executable_;
  bool declared_causal_;
};

}  // namespace noisesim::eval

#endif  // NOISESIM_ADAPT_EVAL_SE_BACKEND_HPP_
