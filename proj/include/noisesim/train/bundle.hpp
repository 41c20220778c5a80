// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_TRAIN_BUNDLE_HPP_
#define NOISESIM_TRAIN_BUNDLE_HPP_

#include <memory>
#include <string>

#include "noisesim/dsp/stft.hpp"
#include "noisesim/losses/losses.hpp"
#include "noisesim/models/discriminator.hpp"
#include "noisesim/models/encoder.hpp"
#include "noisesim/models/generator.hpp"
#include "noisesim/train/adam.hpp"

namespace noisesim::train {

struct GanTrainConfig {
  int epochs = 400;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  double lambda_nse = 10.0;
  uint64_t seed = 0;
  losses::AdvForm adv_form = losses::AdvForm::kNonSaturating;
  losses::PclConfig pcl;
  int checkpoint_every = 50;  // epochs
  // false replaces every FiLM input with a fixed zero embedding
  bool condition_embeddings = true;

  nlohmann::json to_json() const;
  static GanTrainConfig from_json(const nlohmann::json& j);
};

// Everything one training run needs to stop and resume bit-exactly:
// the three networks, projection heads, optimizer moments, configs,
// compression constants, and the (seed, step, epoch) stream state.
struct GanBundle {
  models::GeneratorSpec gspec;
  models::DiscriminatorSpec dspec;
  int embed_dim = 128;
  dsp::StftConfig stft_config;
  dsp::Compression compression;
  GanTrainConfig config;
  int64_t step = 0;
  int64_t epoch = 0;

  models::Generator generator;
  models::Discriminator discriminator;
  std::shared_ptr<models::EncoderBackbone> backbone;
  losses::PclProjection projection;
  Adam opt_g, opt_d;

  static GanBundle create(const models::GeneratorSpec& gspec,
                          const models::DiscriminatorSpec& dspec,
                          std::shared_ptr<models::EncoderBackbone> backbone,
                          const dsp::StftConfig& stft_config, const dsp::Compression& compression,
                          const GanTrainConfig& config);

  ParamMap generator_params() const;      // generator + FiLM + projection heads
  ParamMap discriminator_params() const;
  ParamMap backbone_params() const;
};

void save_bundle(const GanBundle& bundle, const std::string& path);
GanBundle load_bundle(const std::string& path);

}  // namespace noisesim::train

#endif  // NOISESIM_TRAIN_BUNDLE_HPP_
