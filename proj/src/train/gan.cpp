// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/train/gan.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace noisesim::train {

namespace {

Tensor embed_no_grad(const models::EncoderBackbone& backbone, const Tensor& segment) {
  NoGradGuard ng;
  return models::encoder_embed(backbone, segment);
}

}  // namespace

losses::LossReport train_gan_step(GanBundle& bundle, const Tensor& clean_seg,
                                  const Tensor& noisy_seg) {
  const GanTrainConfig& cfg = bundle.config;
  const uint64_t seed = cfg.seed;
  const uint64_t step_u = static_cast<uint64_t>(bundle.step);

  ParamMap g_params = bundle.generator_params();
  ParamMap d_params = bundle.discriminator_params();
  ParamMap b_params = bundle.backbone_params();
  g_params.set_requires_grad(true);
  d_params.set_requires_grad(true);
  b_params.set_requires_grad(false);  // frozen measurement device

  Tensor n_cond;
  if (cfg.condition_embeddings)
    n_cond = embed_no_grad(*bundle.backbone, noisy_seg);
  else
    n_cond = Tensor::zeros({bundle.embed_dim});

  Rng dropout_rng = rng_stream(seed, "dropout", step_u);
  Rng pcl_src_rng = rng_stream(seed, "pcl_src", step_u);
  Rng pcl_tgt_rng = rng_stream(seed, "pcl_tgt", step_u);

  // ---- discriminator update (real vs detached fake) ----
  models::GeneratorTaps taps_clean;
  Tensor x_g = bundle.generator.forward(clean_seg, n_cond, true, &dropout_rng, &taps_clean);
  Tensor d_real = bundle.discriminator.forward(noisy_seg);
  Tensor d_fake_detached = bundle.discriminator.forward(x_g.detach());
  losses::AdvLossResult adv_for_d = losses::adv_loss(d_real, d_fake_detached, cfg.adv_form);
  d_params.zero_grad();
  adv_for_d.adv_d.backward();
  bundle.opt_d.step(d_params);

  // ---- generator update (updated discriminator, conventional ordering) ----
  Tensor d_fake = bundle.discriminator.forward(x_g);
  losses::AdvLossResult adv_for_g = losses::adv_loss(d_real.detach(), d_fake, cfg.adv_form);

  models::GeneratorTaps taps_xg;
  bundle.generator.encode(x_g, n_cond, true, &dropout_rng, &taps_xg);
  Tensor pcl_src = losses::pcl_loss(taps_clean, taps_xg, cfg.pcl, bundle.projection, pcl_src_rng);

  models::GeneratorTaps taps_noisy;
  Tensor x_idt = bundle.generator.forward(noisy_seg, n_cond, true, &dropout_rng, &taps_noisy);
  models::GeneratorTaps taps_idt;
  bundle.generator.encode(x_idt, n_cond, true, &dropout_rng, &taps_idt);
  Tensor pcl_tgt = losses::pcl_loss(taps_noisy, taps_idt, cfg.pcl, bundle.projection, pcl_tgt_rng);

  Tensor nse;
  if (cfg.lambda_nse != 0.0 && cfg.condition_embeddings) {
    nse = losses::nse_loss(n_cond, x_g, *bundle.backbone);
  } else {
    // value logged for diagnostics only; no gradient path
    NoGradGuard ng;
    nse = cfg.condition_embeddings ? losses::nse_loss(n_cond, x_g, *bundle.backbone)
                                   : Tensor::scalar(0.0);
  }

  const double lambda = cfg.condition_embeddings ? cfg.lambda_nse : 0.0;
  Tensor total = losses::total_loss(adv_for_g.adv_g, pcl_src, pcl_tgt, nse, lambda);
  g_params.zero_grad();
  d_params.zero_grad();  // gradients reaching D through d_fake are discarded
  total.backward();
  bundle.opt_g.step(g_params);

  losses::LossReport report;
  try {
    report = losses::make_report(bundle.step, adv_for_d.adv_d.item(), adv_for_g.adv_g.item(),
                                 pcl_src.item(), pcl_tgt.item(), nse.item(), lambda);
  } catch (const NumericsError& e) {
    throw NumericsError(std::string(e.what()) + " (training diverged at step " +
                        std::to_string(bundle.step) + ")");
  }
  ++bundle.step;
  return report;
}

void train_gan(GanBundle& bundle, const data::SegmentPool& clean_pool,
               const data::SegmentPool& noisy_pool, const GanTrainHooks& hooks) {
  const GanTrainConfig& cfg = bundle.config;
  NS_CHECK(clean_pool.size() > 0 && noisy_pool.size() > 0, InvalidInput,
           "train_gan: empty segment pool");

  std::ofstream log;
  if (!hooks.log_path.empty()) {
    log.open(hooks.log_path, std::ios::app);
    NS_CHECK(log.good(), IoError, "train_gan: cannot open loss log " << hooks.log_path);
  }

  const auto checkpoint = [&](int64_t epoch) {
    if (hooks.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(hooks.checkpoint_dir);
    const std::string path =
        hooks.checkpoint_dir + "/bundle_epoch" + std::to_string(epoch) + ".nsa";
    save_bundle(bundle, path);
    NS_LOG << "train_gan: checkpoint " << path;
  };

  for (int64_t epoch = bundle.epoch; epoch < cfg.epochs; ++epoch) {
    data::EpochSampler sampler(&clean_pool, &noisy_pool, cfg.batch_size, cfg.seed, epoch);
    data::UnpairedBatch batch;
    while (sampler.next(&batch)) {
      for (size_t i = 0; i < batch.clean.size(); ++i) {
        Tensor y = models::segment_to_tensor(batch.clean[i].data);
        Tensor x_t = models::segment_to_tensor(batch.noisy[i].data);
        losses::LossReport report = train_gan_step(bundle, y, x_t);
        if (log.is_open()) log << report.to_json_line() << "\n";
        if (hooks.on_step) hooks.on_step(report);
      }
    }
    bundle.epoch = epoch + 1;
    if (log.is_open()) log.flush();
    if (hooks.on_epoch_end) hooks.on_epoch_end(bundle.epoch);
    if (cfg.checkpoint_every > 0 && bundle.epoch % cfg.checkpoint_every == 0 &&
        bundle.epoch < cfg.epochs)
      checkpoint(bundle.epoch);
  }
  checkpoint(bundle.epoch);
}

}  // namespace noisesim::train
