// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_MODELS_ENCODER_HPP_
#define NOISESIM_MODELS_ENCODER_HPP_

#include <memory>
#include <string>
#include <vector>

#include "noisesim/dsp/stft.hpp"
#include "noisesim/models/modules.hpp"

namespace noisesim::models {

// Noise-embedding backbone. Implementations map a compressed-magnitude
// segment [1,129,128] to a penultimate feature sequence [D, T']; the
// utterance-level noise embedding is the time mean of that sequence.
class EncoderBackbone {
 public:
  virtual ~EncoderBackbone() = default;
  virtual int embed_dim() const = 0;
  virtual std::string arch() const = 0;
  virtual Tensor penultimate(const Tensor& segment) const = 0;
  virtual void collect(ParamMap& pm, const std::string& prefix) const = 0;
};

// [D, T'] -> [D] mean over time frames.
Tensor encoder_embed(const EncoderBackbone& backbone, const Tensor& segment);

// Attachable classification head over K classes.
struct ClassifierHead {
  LinearLayer fc;
  int classes = 0;

  static ClassifierHead create(int embed_dim, int classes, uint64_t seed);
};

// logits over the head's classes; throws ConfigError when no head is attached.
Tensor encoder_classify(const EncoderBackbone& backbone, const ClassifierHead* head,
                        const Tensor& segment);

// Desk-scale backbone: four stride-2 conv blocks; penultimate features are
// the last block's activations mean-pooled over the frequency axis.
class ConvEncoderBackbone : public EncoderBackbone {
 public:
  ConvEncoderBackbone() = default;
  ConvEncoderBackbone(int embed_dim, uint64_t init_seed);

  int embed_dim() const override { return embed_dim_; }
  std::string arch() const override { return "conv4"; }
  Tensor penultimate(const Tensor& segment) const override;
  void collect(ParamMap& pm, const std::string& prefix) const override;

 private:
  int embed_dim_ = 128;
  std::vector<Conv2dLayer> blocks_;
};

// Backbone checkpoints: a self-describing archive (arch tag + embed dim +
// parameters + the compression constants of the magnitude domain it was
// tuned on). Foreign arch tags raise ConfigError, which is where an
// externally pre-trained encoder would plug in.
struct BackboneCheckpoint {
  std::shared_ptr<EncoderBackbone> backbone;
  dsp::Compression compression;
};

void save_backbone(const EncoderBackbone& backbone, const std::string& path,
                   const dsp::Compression& compression = {});
BackboneCheckpoint load_backbone(const std::string& path);

}  // namespace noisesim::models

#endif  // NOISESIM_MODELS_ENCODER_HPP_
