// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "noisesim/adapt_eval/metrics.hpp"
#include "noisesim/data/sampling.hpp"
#include "noisesim/dsp/wav.hpp"
#include "noisesim/simulate/simulate.hpp"
#include "testutil/toy_corpus.hpp"

using namespace noisesim;
using namespace noisesim::sim;
namespace fs = std::filesystem;

namespace {

const testutil::ToyCorpus& toy() {
  static testutil::ToyCorpus c = testutil::make_toy_corpus(
      (fs::temp_directory_path() / "noisesim_toy_sim").string(), 4242, 8, 2, 4, 1.1);
  return c;
}

train::GanBundle make_bundle(uint64_t seed, bool nudge) {
  data::Manifest clean = data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean});
  data::Manifest noisy = data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy});
  dsp::Compression comp = data::fit_compression({&clean, &noisy});
  train::GanTrainConfig cfg;
  cfg.seed = seed;
  cfg.pcl.patches_per_layer = 8;
  cfg.pcl.negatives = 16;
  cfg.pcl.proj_hidden = 16;
  cfg.pcl.proj_dim = 8;
  train::GanBundle bundle = train::GanBundle::create(
      models::GeneratorSpec{4, 3, 0.5}, models::DiscriminatorSpec{4},
      std::make_shared<models::ConvEncoderBackbone>(16, seed), {}, comp, cfg);
  if (nudge) {
    // stand in for a trained generator: nonzero FiLM maps and head
    ParamMap pm = bundle.generator_params();
    Rng rng(seed + 1);
    for (auto& [name, t] : pm.params)
      for (auto& v : const_cast<Tensor&>(t).vec()) v += 0.03 * rng.normal();
  }
  return bundle;
}

}  // namespace

TEST_CASE("perturb_embedding semantics") {
  Rng init(3);
  Tensor n = Tensor::randn({128}, init, 1.0);

  PerturbationConfig zero{0.0, 7};
  Tensor same = perturb_embedding(n, zero);
  for (int64_t i = 0; i < n.size(); ++i) CHECK(same.data()[i] == n.data()[i]);

  PerturbationConfig p{2.0, 7};
  Tensor a = perturb_embedding(n, p);
  Tensor b = perturb_embedding(n, p);
  for (int64_t i = 0; i < n.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  PerturbationConfig q{2.0, 8};
  Tensor c = perturb_embedding(n, q);
  bool differs = false;
  for (int64_t i = 0; i < n.size(); ++i) differs |= a.data()[i] != c.data()[i];
  CHECK(differs);

  PerturbationConfig bad{-1.0, 7};
  CHECK_THROWS_AS(perturb_embedding(n, bad), InvalidInput);
}

TEST_CASE("perturbation matches the configured spread over 1e4 draws") {
  const int draws = 10000, dim = 128;
  Tensor zero = Tensor::zeros({dim});
  Rng rng = rng_stream(99, "mc");
  std::vector<double> sum(dim, 0.0), sum2(dim, 0.0);
  double disp = 0.0;
  for (int d = 0; d < draws; ++d) {
    Tensor p = perturb_embedding(zero, 2.0, rng);
    double norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      sum[i] += p.data()[i];
      sum2[i] += p.data()[i] * p.data()[i];
      norm2 += p.data()[i] * p.data()[i];
    }
    disp += std::sqrt(norm2);
  }
  for (int i = 0; i < dim; ++i) {
    const double mean = sum[i] / draws;
    const double std = std::sqrt(sum2[i] / draws - mean * mean);
    CHECK(std >= 1.95);
    CHECK(std <= 2.05);
  }
  // expected displacement grows as sigma * sqrt(D)
  const double expected = 2.0 * std::sqrt(static_cast<double>(dim));
  CHECK(disp / draws == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("sigma zero simulation is bit-deterministic") {
  train::GanBundle bundle = make_bundle(5, true);
  dsp::Waveform clean = dsp::read_wav(
      data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean})
          .entries[0]
          .audio_path);
  dsp::Waveform target = dsp::read_wav(
      data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy})
          .entries[0]
          .audio_path);

  SimulateOptions opts;
  opts.sigma = 0.0;
  opts.seed = 11;
  dsp::Waveform a = simulate_utterance(clean, target, bundle, opts);
  dsp::Waveform b = simulate_utterance(clean, target, bundle, opts);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.size() == clean.samples.size());
}

TEST_CASE("sigma two with different seeds produces different mixtures") {
  train::GanBundle bundle = make_bundle(5, true);
  data::Manifest cleanm = data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean});
  data::Manifest noisym = data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy});
  dsp::Waveform clean = dsp::read_wav(cleanm.entries[1].audio_path);
  dsp::Waveform target = dsp::read_wav(noisym.entries[1].audio_path);

  SimulateOptions a{2.0, 21}, b{2.0, 22};
  dsp::Waveform wa = simulate_utterance(clean, target, bundle, a);
  dsp::Waveform wb = simulate_utterance(clean, target, bundle, b);
  CHECK(wa.samples != wb.samples);
  const double snr_a = eval::si_snr_db(wa, clean);
  const double snr_b = eval::si_snr_db(wb, clean);
  CHECK(snr_a != doctest::Approx(snr_b).epsilon(1e-12));
}

TEST_CASE("identity-initialized generator simulates the clean input back") {
  train::GanBundle bundle = make_bundle(7, false);  // untrained: exact identity
  dsp::Waveform clean = dsp::read_wav(
      data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean})
          .entries[2]
          .audio_path);
  dsp::Waveform target = dsp::read_wav(
      data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy})
          .entries[2]
          .audio_path);
  SimulateOptions opts;
  opts.sigma = 0.0;
  SimulateStats stats;
  dsp::Waveform out = simulate_utterance(clean, target, bundle, opts, &stats);
  REQUIRE(out.samples.size() == clean.samples.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 256; i + 256 < clean.samples.size(); ++i) {
    num += (out.samples[i] - clean.samples[i]) * (out.samples[i] - clean.samples[i]);
    den += clean.samples[i] * clean.samples[i];
  }
  CHECK(std::sqrt(num / den) < 1e-3);
  CHECK(stats.total_bins > 0);
  CHECK(stats.clamp_rate() < 0.01);
}

TEST_CASE("generate_dataset is reproducible and resumable") {
  train::GanBundle bundle = make_bundle(9, true);
  data::Manifest cleanm = data::build_manifest(toy().source_clean_dir, {data::Domain::kSourceClean});
  data::Manifest targets = data::build_manifest(toy().target_noisy_dir, {data::Domain::kTargetNoisy});

  const fs::path out = fs::temp_directory_path() / "noisesim_gen_test";
  fs::remove_all(out);
  GenerateConfig cfg;
  cfg.sigma = 1.0;
  cfg.seed = 77;
  auto pairs = generate_dataset(cleanm, targets, bundle, cfg, out.string());
  REQUIRE(pairs.size() == cleanm.size());
  for (const auto& p : pairs) {
    CHECK(fs::exists(p.simulated_waveform_path));
    CHECK(targets.contains(p.target_noise_id));
    CHECK(p.sigma_used == 1.0);
    dsp::Waveform sim = dsp::read_wav(p.simulated_waveform_path);
    dsp::Waveform clean = dsp::read_wav(p.clean_waveform_path);
    CHECK(sim.samples.size() == clean.samples.size());
  }

  // interrupted run: remove two outputs and the pair manifest, then resume
  std::vector<SimulatedPair> before = load_pairs((out / "pairs.jsonl").string());
  fs::remove(pairs[1].simulated_waveform_path);
  fs::remove(pairs[4].simulated_waveform_path);
  fs::remove(out / "pairs.jsonl");
  auto resumed = generate_dataset(cleanm, targets, bundle, cfg, out.string());
  std::vector<SimulatedPair> after = load_pairs((out / "pairs.jsonl").string());
  REQUIRE(after.size() == before.size());
  for (size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i].clean_id == before[i].clean_id);
    CHECK(after[i].target_noise_id == before[i].target_noise_id);
  }

  // same directory with a different run configuration is a collision
  GenerateConfig other = cfg;
  other.seed = 78;
  CHECK_THROWS_AS(generate_dataset(cleanm, targets, bundle, other, out.string()), InvalidInput);
  other.force = true;
  CHECK_NOTHROW(generate_dataset(cleanm, targets, bundle, other, out.string()));
  fs::remove_all(out);
}
