// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_TRAIN_GAN_HPP_
#define NOISESIM_TRAIN_GAN_HPP_

#include <functional>
#include <string>

#include "noisesim/data/sampling.hpp"
#include "noisesim/train/bundle.hpp"

namespace noisesim::train {

struct GanTrainHooks {
  std::string log_path;        // JSONL loss log, appended per step; "" disables
  std::string checkpoint_dir;  // periodic checkpoints; "" disables
  std::function<void(const losses::LossReport&)> on_step;
  std::function<void(int64_t epoch)> on_epoch_end;
};

// Adversarial training with the composite objective. Resumes from
// bundle.epoch and runs to bundle.config.epochs. The backbone is frozen:
// gradients flow through it into the generator but its parameters never
// change. Per step the discriminator updates first, then the generator
// (with FiLM maps and projection heads).
void train_gan(GanBundle& bundle, const data::SegmentPool& clean_pool,
               const data::SegmentPool& noisy_pool, const GanTrainHooks& hooks = {});

// One step exposed for tests: runs a single (y, x_t) pair. Returns the
// per-component report for bundle.step.
losses::LossReport train_gan_step(GanBundle& bundle, const Tensor& clean_seg,
                                  const Tensor& noisy_seg);

}  // namespace noisesim::train

#endif  // NOISESIM_TRAIN_GAN_HPP_
