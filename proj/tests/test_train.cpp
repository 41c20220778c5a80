// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "noisesim/dsp/wav.hpp"
#include "noisesim/losses/losses.hpp"
#include "noisesim/train/encoder_finetune.hpp"
#include "noisesim/train/gan.hpp"
#include "testutil/toy_corpus.hpp"

using namespace noisesim;
using namespace noisesim::train;
namespace fs = std::filesystem;

namespace {

const testutil::ToyCorpus& toy() {
  static testutil::ToyCorpus c = testutil::make_toy_corpus(
      (fs::temp_directory_path() / "noisesim_toy_train").string(), 777, 8, 2, 4, 1.1);
  return c;
}

GanTrainConfig tiny_config(uint64_t seed) {
  GanTrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 2e-4;
  cfg.seed = seed;
  cfg.lambda_nse = 10.0;
  cfg.checkpoint_every = 0;
  cfg.pcl.patches_per_layer = 8;
  cfg.pcl.negatives = 16;
  cfg.pcl.proj_hidden = 32;
  cfg.pcl.proj_dim = 16;
  return cfg;
}

GanBundle tiny_bundle(uint64_t seed, const dsp::Compression& comp) {
  return GanBundle::create(models::GeneratorSpec{4, 3, 0.5}, models::DiscriminatorSpec{4},
                           std::make_shared<models::ConvEncoderBackbone>(16, seed), {}, comp,
                           tiny_config(seed));
}

struct Pools {
  data::SegmentPool clean, noisy;
  dsp::Compression comp;
};

Pools toy_pools() {
  data::Manifest clean = data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean});
  data::Manifest noisy = data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy});
  Pools p;
  p.comp = data::fit_compression({&clean, &noisy});
  p.clean = data::build_pool(clean, {}, p.comp);
  p.noisy = data::build_pool(noisy, {}, p.comp);
  return p;
}

std::vector<double> flatten(const ParamMap& pm) {
  std::vector<double> v;
  for (const auto& [name, t] : pm.params) v.insert(v.end(), t.vec().begin(), t.vec().end());
  return v;
}

}  // namespace

TEST_CASE("one gan step with a fixed seed is bit-reproducible") {
  Pools p = toy_pools();
  GanBundle a = tiny_bundle(3, p.comp);
  GanBundle b = tiny_bundle(3, p.comp);

  Tensor y = models::segment_to_tensor(p.clean.items[0].magnitude.leftCols(128));
  Tensor x = models::segment_to_tensor(p.noisy.items[0].magnitude.leftCols(128));
  losses::LossReport ra = train_gan_step(a, y, x);
  losses::LossReport rb = train_gan_step(b, y, x);

  CHECK(ra.total == rb.total);
  CHECK(ra.adv_d == rb.adv_d);
  CHECK(flatten(a.generator_params()) == flatten(b.generator_params()));
  CHECK(flatten(a.discriminator_params()) == flatten(b.discriminator_params()));
}

TEST_CASE("backbone is frozen during gan training") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(5, p.comp);
  const std::vector<double> before = flatten(bundle.backbone_params());
  GanTrainHooks hooks;
  bundle.config.epochs = 1;
  train_gan(bundle, p.clean, p.noisy, hooks);
  CHECK(flatten(bundle.backbone_params()) == before);
  CHECK(bundle.step == static_cast<int64_t>(std::max(p.clean.size(), p.noisy.size())));
}

TEST_CASE("pcl and nse gradients never touch the discriminator") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(7, p.comp);
  ParamMap d_params = bundle.discriminator_params();
  ParamMap g_params = bundle.generator_params();
  d_params.set_requires_grad(true);
  g_params.set_requires_grad(true);

  Tensor y = models::segment_to_tensor(p.clean.items[1].magnitude.leftCols(128));
  Tensor x = models::segment_to_tensor(p.noisy.items[1].magnitude.leftCols(128));
  Tensor n = models::encoder_embed(*bundle.backbone, x).detach();

  Rng drop = rng_stream(1, "dropout");
  models::GeneratorTaps taps_y, taps_xg;
  Tensor x_g = bundle.generator.forward(y, n, true, &drop, &taps_y);
  bundle.generator.encode(x_g, n, true, &drop, &taps_xg);
  Rng loc = rng_stream(1, "pcl");
  Tensor pcl = losses::pcl_loss(taps_y, taps_xg, bundle.config.pcl, bundle.projection, loc);
  Tensor nse = losses::nse_loss(n, x_g, *bundle.backbone);

  d_params.zero_grad();
  g_params.zero_grad();
  add(pcl, mul_scalar(nse, 10.0)).backward();
  for (const auto& [name, t] : d_params.params) CHECK(t.grad().empty());
  bool g_has_grads = false;
  for (const auto& [name, t] : g_params.params) g_has_grads |= !t.grad().empty();
  CHECK(g_has_grads);

  // and the discriminator objective on a detached fake never touches G
  Tensor d_real = bundle.discriminator.forward(x);
  Tensor d_fake = bundle.discriminator.forward(x_g.detach());
  d_params.zero_grad();
  g_params.zero_grad();
  losses::adv_loss(d_real, d_fake).adv_d.backward();
  for (const auto& [name, t] : g_params.params) CHECK(t.grad().empty());
}

TEST_CASE("bundle save/load probe outputs are bit-identical") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(11, p.comp);
  GanTrainHooks hooks;
  bundle.config.epochs = 1;
  train_gan(bundle, p.clean, p.noisy, hooks);

  const std::string path = (fs::temp_directory_path() / "noisesim_bundle_probe.nsa").string();
  save_bundle(bundle, path);
  GanBundle loaded = load_bundle(path);
  CHECK(loaded.step == bundle.step);
  CHECK(loaded.epoch == bundle.epoch);
  CHECK(loaded.compression.hi == bundle.compression.hi);

  Tensor probe = models::segment_to_tensor(p.clean.items[2].magnitude.leftCols(128));
  Tensor n = models::encoder_embed(*bundle.backbone, probe).detach();
  Tensor out_a = bundle.generator.forward(probe, n, false, nullptr);
  Tensor n2 = models::encoder_embed(*loaded.backbone, probe).detach();
  Tensor out_b = loaded.generator.forward(probe, n2, false, nullptr);
  REQUIRE(out_a.size() == out_b.size());
  for (int64_t i = 0; i < out_a.size(); ++i) CHECK(out_a.data()[i] == out_b.data()[i]);
  fs::remove(path);
}

TEST_CASE("truncated and version-mismatched checkpoints are rejected") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(13, p.comp);
  const fs::path dir = fs::temp_directory_path();
  const std::string path = (dir / "noisesim_bundle_corrupt.nsa").string();
  save_bundle(bundle, path);

  // truncate
  const auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_bundle(path), IoError);

  // version mismatch
  save_bundle(bundle, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const uint32_t bogus = 999;
    f.write(reinterpret_cast<const char*>(&bogus), sizeof(bogus));
  }
  CHECK_THROWS_WITH_AS(load_bundle(path), doctest::Contains("version"), IoError);
  fs::remove(path);
}

TEST_CASE("resumed training matches uninterrupted training exactly") {
  Pools p = toy_pools();

  GanBundle straight = tiny_bundle(17, p.comp);
  straight.config.epochs = 2;
  train_gan(straight, p.clean, p.noisy, {});

  GanBundle first = tiny_bundle(17, p.comp);
  first.config.epochs = 1;
  train_gan(first, p.clean, p.noisy, {});
  const std::string path = (fs::temp_directory_path() / "noisesim_bundle_resume.nsa").string();
  save_bundle(first, path);

  GanBundle resumed = load_bundle(path);
  resumed.config.epochs = 2;
  train_gan(resumed, p.clean, p.noisy, {});

  CHECK(resumed.step == straight.step);
  CHECK(flatten(resumed.generator_params()) == flatten(straight.generator_params()));
  CHECK(flatten(resumed.discriminator_params()) == flatten(straight.discriminator_params()));
  fs::remove(path);
}

TEST_CASE("loss log is appended per step with monotone step indices") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(19, p.comp);
  bundle.config.epochs = 1;
  const std::string log_path = (fs::temp_directory_path() / "noisesim_losses.jsonl").string();
  fs::remove(log_path);
  GanTrainHooks hooks;
  hooks.log_path = log_path;
  train_gan(bundle, p.clean, p.noisy, hooks);

  std::ifstream f(log_path);
  std::string line;
  int64_t last = -1, count = 0;
  while (std::getline(f, line)) {
    losses::LossReport r = losses::LossReport::from_json_line(line);
    CHECK(r.step == last + 1);
    CHECK(std::isfinite(r.total));
    CHECK(r.total ==
          doctest::Approx(r.adv_g + r.pcl_src + r.pcl_tgt + r.lambda_nse * r.nse).epsilon(1e-12));
    last = r.step;
    ++count;
  }
  CHECK(count == bundle.step);
  fs::remove(log_path);
}

TEST_CASE("divergence aborts with the component name") {
  Pools p = toy_pools();
  GanBundle bundle = tiny_bundle(23, p.comp);
  ParamMap gp = bundle.generator_params();
  for (auto& [name, t] : gp.params)
    if (name.rfind("g.up2", 0) == 0)
      for (auto& v : const_cast<Tensor&>(t).vec()) v = std::numeric_limits<double>::quiet_NaN();
  Tensor y = models::segment_to_tensor(p.clean.items[0].magnitude.leftCols(128));
  Tensor x = models::segment_to_tensor(p.noisy.items[0].magnitude.leftCols(128));
  CHECK_THROWS_AS(train_gan_step(bundle, y, x), NumericsError);
}

TEST_CASE("two-stage encoder fine-tuning learns the desk corpus") {
  // stage 1: the five source noise classes; stage 2: per-utterance classes
  data::Manifest noisy =
      data::build_manifest(toy().source_noisy_dir, {data::Domain::kTargetNoisy});
  data::Manifest targets =
      data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy});
  dsp::Compression comp = data::fit_compression({&noisy, &targets});

  models::ConvEncoderBackbone backbone(32, 99);
  EncoderFinetuneConfig cfg;
  cfg.stage1 = {40, 1e-3};
  cfg.stage2 = {60, 1e-3};
  cfg.seed = 5;
  FinetuneResult result = finetune_encoder(backbone, noisy, targets, cfg, {}, comp);
  CHECK(result.stage1_classes == 5);
  CHECK(result.stage2_classes == 10);
  CHECK(result.stage1_accuracy >= 0.95);
  CHECK(result.stage2_accuracy >= 0.90);

  // embeddings of the same utterance sit closer than across utterances
  auto embed = [&](const std::string& path, int offset) {
    dsp::Spectrogram s = dsp::stft(dsp::read_wav(path));
    Eigen::MatrixXd mag = s.magnitude.unaryExpr([&](double m) { return comp.apply(m); });
    Eigen::MatrixXd seg = mag.middleCols(offset, 128);
    return models::encoder_embed(backbone, models::segment_to_tensor(seg)).vec();
  };
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      num += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return num / std::sqrt(na * nb);
  };
  double within = 0.0, across = 0.0;
  int pairs = 0;
  for (int u = 0; u < 4; ++u) {
    auto e0 = embed(targets.entries[u].audio_path, 0);
    auto e1 = embed(targets.entries[u].audio_path, 9);
    within += cosine(e0, e1);
    auto f0 = embed(targets.entries[(u + 3) % targets.size()].audio_path, 0);
    across += cosine(e0, f0);
    ++pairs;
  }
  CHECK(within / pairs > across / pairs);
}

TEST_CASE("finetune_encoder validates labels") {
  data::Manifest clean = data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean});
  dsp::Compression comp = data::fit_compression({&clean});
  models::ConvEncoderBackbone backbone(16, 1);
  EncoderFinetuneConfig cfg;
  cfg.run_stage2 = false;
  // clean corpus has no noise_type labels
  CHECK_THROWS_AS(finetune_encoder(backbone, clean, clean, cfg, {}, comp), ConfigError);
}
