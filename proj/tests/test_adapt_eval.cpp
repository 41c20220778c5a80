// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "noisesim/adapt_eval/analysis.hpp"
#include "noisesim/adapt_eval/evaluate.hpp"
#include "noisesim/dsp/wav.hpp"
#include "testutil/toy_corpus.hpp"

using namespace noisesim;
using namespace noisesim::eval;
namespace fs = std::filesystem;

namespace {

dsp::Waveform noise_wave(int64_t n, uint64_t seed, double amp = 0.05) {
  dsp::Waveform w;
  w.samples.resize(n);
  Rng rng(seed);
  for (auto& s : w.samples) s = amp * rng.normal();
  return w;
}

dsp::Waveform sine_wave(double freq, double seconds, double amp = 0.3) {
  dsp::Waveform w;
  const int64_t n = static_cast<int64_t>(seconds * 16000);
  w.samples.resize(n);
  for (int64_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / 16000.0);
  return w;
}

dsp::Waveform mix_exact_snr(const dsp::Waveform& clean, const dsp::Waveform& noise, double db) {
  double ec = 0.0, en = 0.0;
  for (size_t i = 0; i < clean.samples.size(); ++i) {
    ec += clean.samples[i] * clean.samples[i];
    en += noise.samples[i] * noise.samples[i];
  }
  dsp::Waveform out = clean;
  const double scale = std::sqrt(ec / en) * std::pow(10.0, -db / 20.0);
  for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += scale * noise.samples[i];
  return out;
}

// minimal inline backend for evaluation-path tests
class PassthroughBackend : public SeBackend {
 public:
  dsp::Waveform enhance(const dsp::Waveform& noisy) override { return noisy; }
  double train_step(const dsp::Waveform&, const dsp::Waveform&) override {
    throw ConfigError("not trainable");
  }
  bool trainable() const override { return false; }
  bool causal() const override { return true; }
  void save(const std::string&) const override {}
};

class OracleBackend : public SeBackend {
 public:
  explicit OracleBackend(std::string clean_dir) : dir_(std::move(clean_dir)) {}
  dsp::Waveform enhance(const dsp::Waveform& noisy) override {
    (void)noisy;
    return dsp::read_wav(next_path_);
  }
  void set_next(const std::string& p) { next_path_ = p; }
  double train_step(const dsp::Waveform&, const dsp::Waveform&) override { return 0.0; }
  bool trainable() const override { return false; }
  bool causal() const override { return false; }
  void save(const std::string&) const override {}

 private:
  std::string dir_, next_path_;
};

}  // namespace

TEST_CASE("si_snr is scale invariant and capped") {
  dsp::Waveform clean = sine_wave(440.0, 0.5);
  dsp::Waveform est = mix_exact_snr(clean, noise_wave(clean.samples.size(), 3), 8.0);
  const double base = si_snr_db(est, clean);
  for (double alpha : {0.5, 2.0, 17.0}) {
    dsp::Waveform scaled = est;
    for (auto& s : scaled.samples) s *= alpha;
    CHECK(std::abs(si_snr_db(scaled, clean) - base) < 1e-6);
  }
  CHECK(si_snr_db(clean, clean) == kSiSnrCeilingDb);
}

TEST_CASE("identity enhancement of a 10 dB mixture scores about 10 dB") {
  dsp::Waveform clean = sine_wave(700.0, 1.0);
  dsp::Waveform noisy = mix_exact_snr(clean, noise_wave(clean.samples.size(), 9), 10.0);
  CHECK(si_snr_db(noisy, clean) == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("evaluate buckets by snr and aggregates means") {
  const fs::path dir = fs::temp_directory_path() / "noisesim_eval_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir / "noisy");
  fs::create_directories(dir / "clean");

  const std::vector<double> snrs = {2.5, 7.5, 7.5, 12.5, 17.5, 17.5};
  data::Manifest test;
  for (size_t i = 0; i < snrs.size(); ++i) {
    dsp::Waveform clean = sine_wave(400.0 + 60.0 * i, 0.6);
    dsp::Waveform noisy = mix_exact_snr(clean, noise_wave(clean.samples.size(), 100 + i), snrs[i]);
    const std::string cp = (dir / "clean" / ("u" + std::to_string(i) + ".wav")).string();
    const std::string np = (dir / "noisy" / ("u" + std::to_string(i) + ".wav")).string();
    dsp::write_wav(cp, clean, dsp::WavEncoding::kFloat32);
    dsp::write_wav(np, noisy, dsp::WavEncoding::kFloat32);
    test.entries.push_back({"u" + std::to_string(i), np, data::Domain::kTargetNoisy,
                            std::nullopt, snrs[i], cp});
  }

  PassthroughBackend backend;
  MetricReport report = evaluate(backend, test);
  CHECK(report.evaluated == 6);
  REQUIRE(report.buckets.size() == 4);

  // bucket partition is total and the means match a hand computation
  std::map<double, std::pair<double, int>> manual;
  for (const auto& um : report.per_utterance) {
    manual[um.snr_bucket].first += um.si_snr;
    manual[um.snr_bucket].second += 1;
  }
  int assigned = 0;
  for (const auto& b : report.buckets) {
    assigned += b.count;
    if (b.count > 0)
      CHECK(b.si_snr ==
            doctest::Approx(manual[b.bucket].first / manual[b.bucket].second).epsilon(1e-12));
  }
  CHECK(assigned == 6);
  CHECK(report.buckets[0].count == 1);
  CHECK(report.buckets[1].count == 2);
  CHECK(report.buckets[2].count == 1);
  CHECK(report.buckets[3].count == 2);
  // identity enhancement scores near the construction snr per bucket
  for (const auto& b : report.buckets)
    if (b.count > 0) CHECK(std::abs(b.si_snr - b.bucket) < 0.2);

  // perfect enhancement hits the ceiling
  OracleBackend oracle((dir / "clean").string());
  data::Manifest one;
  one.entries.push_back(test.entries[0]);
  oracle.set_next(*test.entries[0].clean_path);
  MetricReport perfect = evaluate(oracle, one);
  CHECK(perfect.mean_si_snr == kSiSnrCeilingDb);
  fs::remove_all(dir);
}

TEST_CASE("metric providers run and absent metrics are skipped") {
  const fs::path dir = fs::temp_directory_path() / "noisesim_provider_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string stub = (dir / "fake_metric.sh").string();
  {
    std::ofstream f(stub);
    f << "#!/bin/sh\necho 3.21\n";
  }
  fs::permissions(stub, fs::perms::owner_all);

  MetricProviderRegistry reg;
  reg.register_provider("pesq", stub);
  dsp::Waveform clean = sine_wave(440.0, 0.3);
  const std::string ref = (dir / "ref.wav").string(), deg = (dir / "deg.wav").string();
  dsp::write_wav(ref, clean);
  dsp::write_wav(deg, clean);
  auto v = reg.compute("pesq", ref, deg);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(3.21));
  CHECK_FALSE(reg.compute("stoi", ref, deg).has_value());

  // registry config file round trip
  const std::string cfg_path = (dir / "providers.json").string();
  {
    std::ofstream f(cfg_path);
    f << "{\"pesq\": \"" << stub << "\"}\n";
  }
  MetricProviderRegistry from_file = MetricProviderRegistry::from_config(cfg_path);
  CHECK(from_file.has("pesq"));
  CHECK_FALSE(from_file.has("stoi"));
  fs::remove_all(dir);
}

TEST_CASE("desk se backend is strictly causal") {
  DeskSeConfig cfg;
  cfg.base_channels = 8;
  cfg.seed = 3;
  DeskSeBackend backend(cfg);
  // push it off the identity so causality is not trivially satisfied
  dsp::Waveform c = sine_wave(500.0, 0.4);
  dsp::Waveform n = mix_exact_snr(c, noise_wave(c.samples.size(), 5), 5.0);
  for (int i = 0; i < 5; ++i) backend.train_step(n, c);

  dsp::Waveform x = mix_exact_snr(sine_wave(800.0, 0.5), noise_wave(8000, 7), 8.0);
  dsp::Waveform full = backend.enhance(x);
  REQUIRE(full.samples.size() == x.samples.size());
  for (size_t cut : {1000ULL, 4097ULL, 7999ULL}) {
    dsp::Waveform prefix = x;
    prefix.samples.resize(cut);
    dsp::Waveform out = backend.enhance(prefix);
    REQUIRE(out.samples.size() == cut);
    for (size_t i = 0; i < cut; ++i)
      CHECK(std::abs(out.samples[i] - full.samples[i]) < 1e-5);
  }

  // flipping a future sample never changes past outputs
  dsp::Waveform flipped = x;
  const size_t q = 5000;
  flipped.samples[q] += 0.5;
  dsp::Waveform out_flipped = backend.enhance(flipped);
  for (size_t i = 0; i < q; ++i) CHECK(out_flipped.samples[i] == full.samples[i]);
  bool future_changed = false;
  for (size_t i = q; i < full.samples.size(); ++i)
    future_changed |= out_flipped.samples[i] != full.samples[i];
  CHECK(future_changed);
}

TEST_CASE("desk se backend checkpoints round trip") {
  DeskSeConfig cfg;
  cfg.base_channels = 8;
  cfg.seed = 11;
  DeskSeBackend backend(cfg);
  dsp::Waveform c = sine_wave(600.0, 0.3);
  dsp::Waveform n = mix_exact_snr(c, noise_wave(c.samples.size(), 13), 5.0);
  backend.train_step(n, c);

  const std::string path = (fs::temp_directory_path() / "noisesim_se.nsa").string();
  backend.save(path);
  auto loaded = DeskSeBackend::load(path);
  dsp::Waveform a = backend.enhance(n);
  dsp::Waveform b = loaded->enhance(n);
  CHECK(a.samples == b.samples);
  fs::remove(path);
}

TEST_CASE("finetune_se runs 2N steps over N pairs and reduces loss") {
  const fs::path dir = fs::temp_directory_path() / "noisesim_finetune_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<sim::SimulatedPair> pairs;
  for (int i = 0; i < 4; ++i) {
    dsp::Waveform clean = sine_wave(350.0 + 90.0 * i, 0.5);
    dsp::Waveform noisy = mix_exact_snr(clean, noise_wave(clean.samples.size(), 40 + i), 3.0);
    sim::SimulatedPair p;
    p.clean_id = "p" + std::to_string(i);
    p.clean_waveform_path = (dir / (p.clean_id + "_clean.wav")).string();
    p.simulated_waveform_path = (dir / (p.clean_id + "_sim.wav")).string();
    dsp::write_wav(p.clean_waveform_path, clean, dsp::WavEncoding::kFloat32);
    dsp::write_wav(p.simulated_waveform_path, noisy, dsp::WavEncoding::kFloat32);
    pairs.push_back(p);
  }

  DeskSeConfig cfg;
  cfg.base_channels = 8;
  cfg.seed = 17;
  DeskSeBackend backend(cfg);
  std::vector<double> curve;
  finetune_se(backend, pairs, 2, 0, &curve);
  CHECK(curve.size() == 2 * pairs.size());

  std::vector<double> more;
  finetune_se(backend, pairs, 8, 1, &more);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 4; ++i) head += more[i];
  for (size_t i = more.size() - 4; i < more.size(); ++i) tail += more[i];
  CHECK(tail < head);

  CHECK_THROWS_AS(finetune_se(backend, {}, 2, 0, nullptr), InvalidInput);
  fs::remove_all(dir);
}

TEST_CASE("snr histograms: bimodal fixture, degenerate single, empty bins") {
  data::Manifest bimodal;
  for (int i = 0; i < 30; ++i)
    bimodal.entries.push_back({"a" + std::to_string(i), "/none.wav", data::Domain::kTargetNoisy,
                               std::nullopt, i % 2 ? 0.0 : 15.0, std::nullopt});
  HistogramSpec spec{-10.0, 25.0, 35};
  Histogram h = snr_histogram(bimodal, "bimodal", spec);
  // peaks exactly at the 0 dB and 15 dB bins
  const int bin0 = static_cast<int>((0.0 - spec.lo) / 1.0);
  const int bin15 = static_cast<int>((15.0 - spec.lo) / 1.0);
  CHECK(h.density[bin0] == doctest::Approx(0.5));
  CHECK(h.density[bin15] == doctest::Approx(0.5));
  int empty = 0;
  for (double d : h.density) empty += d == 0.0;
  CHECK(empty == spec.bins - 2);  // zero bins reported, not omitted

  data::Manifest single;
  single.entries.push_back({"solo", "/none.wav", data::Domain::kTargetNoisy, std::nullopt, 7.0,
                            std::nullopt});
  Histogram hs = snr_histogram(single, "single", spec);
  double total = 0.0;
  for (double d : hs.density) total += d;
  CHECK(total == doctest::Approx(1.0));

  const fs::path dir = fs::temp_directory_path() / "noisesim_hist_out";
  fs::create_directories(dir);
  write_histogram_table({h, hs}, (dir / "hist.tsv").string());
  write_histogram_svg({h, hs}, (dir / "hist.svg").string());
  CHECK(fs::file_size(dir / "hist.tsv") > 0);
  std::ifstream svg(dir / "hist.svg");
  std::string content((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(content.find("polyline") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("embedding projection separates clusters and sanity-checks labels") {
  Rng rng(5);
  const int per = 40, dim = 16;
  // separation 10x the within-cluster norm spread (sqrt(2*dim)*coord std)
  const double coord_std = 0.35;
  const double offset = 5.0 * std::sqrt(2.0 * dim) * coord_std;
  Eigen::MatrixXd x(2 * per, dim);
  std::vector<int> labels(2 * per);
  for (int i = 0; i < per; ++i) {
    for (int d = 0; d < dim; ++d) x(i, d) = coord_std * rng.normal();
    x(i, 0) += offset;
    labels[i] = 0;
  }
  for (int i = per; i < 2 * per; ++i) {
    for (int d = 0; d < dim; ++d) x(i, d) = coord_std * rng.normal();
    x(i, 0) -= offset;
    labels[i] = 1;
  }
  ProjectionResult r = embedding_projection(x, labels);
  CHECK(r.silhouette > 0.8);
  CHECK(r.coords.rows() == 2 * per);

  // shuffled labels have silhouette near zero over 20 trials
  Rng shuffle_rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> shuffled = labels;
    for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i)
      std::swap(shuffled[i], shuffled[shuffle_rng.uniform_int(i + 1)]);
    CHECK(std::abs(silhouette_score(x, shuffled)) < 0.1);
  }

  Eigen::MatrixXd degenerate = Eigen::MatrixXd::Zero(12, 4);
  std::vector<int> dl(12);
  for (int i = 0; i < 12; ++i) dl[i] = i % 2;
  CHECK_THROWS_AS(embedding_projection(degenerate, dl), NumericsError);

  std::vector<int> two_points(2 * per, 0);
  two_points[0] = two_points[1] = 1;  // a class with < 3 points
  CHECK_THROWS_AS(silhouette_score(x, two_points), InvalidInput);
  CHECK_THROWS_AS(embedding_projection(x, labels, "nope"), ConfigError);

  // a registered neighbor-embedding projector is picked up
  register_projector("identity2d", [](const Eigen::MatrixXd& m) {
    return Eigen::MatrixXd(m.leftCols(2));
  });
  ProjectionResult r2 = embedding_projection(x, labels, "identity2d");
  CHECK(r2.coords.col(0).maxCoeff() > 5.0);
}

TEST_CASE("ablation configs rewrite training switches") {
  train::GanTrainConfig base;
  base.lambda_nse = 10.0;
  CHECK_THROWS_AS(ablation_from_string("bogus"), InvalidInput);

  train::GanTrainConfig full = apply_ablation(base, AblationConfig::kFull);
  CHECK(full.lambda_nse == 10.0);
  CHECK(full.condition_embeddings);
  train::GanTrainConfig no_nse = apply_ablation(base, AblationConfig::kNoNse);
  CHECK(no_nse.lambda_nse == 0.0);
  CHECK(no_nse.condition_embeddings);
  train::GanTrainConfig no_emb = apply_ablation(base, AblationConfig::kNoEmbeddings);
  CHECK(no_emb.lambda_nse == 0.0);
  CHECK_FALSE(no_emb.condition_embeddings);
}

TEST_CASE("spectral profile distance separates noise tilts") {
  const fs::path dir = fs::temp_directory_path() / "noisesim_profile_fixture";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(3);
  dsp::Waveform white = testutil::synth_noise("white", rng, 16000);
  dsp::Waveform pink = testutil::synth_noise("pink18", rng, 16000);
  dsp::Waveform pink2 = testutil::synth_noise("pink18", rng, 16000);
  const std::string pw = (dir / "white.wav").string();
  const std::string pp = (dir / "pink.wav").string();
  const std::string pp2 = (dir / "pink2.wav").string();
  dsp::write_wav(pw, white, dsp::WavEncoding::kFloat32);
  dsp::write_wav(pp, pink, dsp::WavEncoding::kFloat32);
  dsp::write_wav(pp2, pink2, dsp::WavEncoding::kFloat32);

  Eigen::VectorXd prof_white = spectral_profile({pw});
  Eigen::VectorXd prof_pink = spectral_profile({pp});
  Eigen::VectorXd prof_pink2 = spectral_profile({pp2});
  CHECK(spectral_profile_distance(prof_pink, prof_pink2) <
        spectral_profile_distance(prof_pink, prof_white));
  fs::remove_all(dir);
}
