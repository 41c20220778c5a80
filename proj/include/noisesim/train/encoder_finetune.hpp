// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_TRAIN_ENCODER_FINETUNE_HPP_
#define NOISESIM_TRAIN_ENCODER_FINETUNE_HPP_

#include "noisesim/data/manifest.hpp"
#include "noisesim/dsp/stft.hpp"
#include "noisesim/models/encoder.hpp"

namespace noisesim::train {

struct EncoderStageConfig {
  int epochs = 30;
  double lr = 1e-4;
};

struct EncoderFinetuneConfig {
  EncoderStageConfig stage1;  // noise-type classes
  EncoderStageConfig stage2;  // one class per utterance
  uint64_t seed = 0;
  bool run_stage1 = true;
  bool run_stage2 = true;
};

struct FinetuneResult {
  double stage1_accuracy = 0.0;
  double stage2_accuracy = 0.0;
  int stage1_classes = 0;
  int stage2_classes = 0;
};

// Two-stage fine-tuning of the noise encoder: first classify noise types
// over a labelled corpus, then treat every utterance of the GAN-training
// target set as its own class. Heads are discarded afterwards; only the
// backbone (the embedding function) survives.
FinetuneResult finetune_encoder(models::EncoderBackbone& backbone,
                                const data::Manifest& stage1_corpus,
                                const data::Manifest& stage2_corpus,
                                const EncoderFinetuneConfig& cfg,
                                const dsp::StftConfig& stft_cfg,
                                const dsp::Compression& compression);

}  // namespace noisesim::train

#endif  // NOISESIM_TRAIN_ENCODER_FINETUNE_HPP_
