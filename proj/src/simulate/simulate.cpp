// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/simulate/simulate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "noisesim/dsp/wav.hpp"

namespace noisesim::sim {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor perturb_embedding(const Tensor& n, double sigma, Rng& rng) {
  NS_CHECK(sigma >= 0.0, InvalidInput, "perturb_embedding: sigma must be >= 0");
  if (sigma == 0.0) return n.detach();
  Tensor out = n.detach();
  for (auto& v : out.vec()) v += sigma * rng.normal();
  return out;
}

Tensor perturb_embedding(const Tensor& n, const PerturbationConfig& cfg) {
  Rng rng = rng_stream(cfg.rng_seed, "perturb");
  return perturb_embedding(n, cfg.sigma, rng);
}

namespace {

// embeddings for every non-padded target segment (fallback: all segments)
std::vector<Tensor> target_segment_embeddings(const dsp::Waveform& target,
                                              const train::GanBundle& bundle) {
  dsp::Spectrogram ts = dsp::stft(target, bundle.stft_config);
  Eigen::MatrixXd mag =
      ts.magnitude.unaryExpr([&](double m) { return bundle.compression.apply(m); });
  auto segs = dsp::segment_matrix(mag, dsp::kSegmentFrames, "target");
  std::vector<Tensor> embeddings;
  NoGradGuard ng;
  for (const auto& seg : segs) {
    if (seg.padded_tail && segs.size() > 1) continue;
    embeddings.push_back(
        models::encoder_embed(*bundle.backbone, models::segment_to_tensor(seg.data)));
  }
  NS_CHECK(!embeddings.empty(), InvalidInput, "simulate: target utterance yields no segments");
  return embeddings;
}

}  // namespace

dsp::Waveform simulate_utterance(const dsp::Waveform& clean, const dsp::Waveform& target,
                                 const train::GanBundle& bundle, const SimulateOptions& opts,
                                 SimulateStats* stats) {
  NS_CHECK(opts.sigma >= 0.0, InvalidInput, "simulate: sigma must be >= 0");
  NoGradGuard ng;

  dsp::Spectrogram clean_spec = dsp::stft(clean, bundle.stft_config);
  const int total_frames = clean_spec.frames();
  Eigen::MatrixXd compressed =
      clean_spec.magnitude.unaryExpr([&](double m) { return bundle.compression.apply(m); });
  auto clean_segs = dsp::segment_matrix(compressed, dsp::kSegmentFrames, "clean");

  std::vector<Tensor> embeddings = target_segment_embeddings(target, bundle);
  // one perturbation draw per utterance, shared across its segments
  Rng perturb_rng = rng_stream(opts.seed, "perturb");
  if (opts.sigma > 0.0 && bundle.config.condition_embeddings) {
    Tensor eps = Tensor::zeros({bundle.embed_dim});
    for (auto& v : eps.vec()) v = opts.sigma * perturb_rng.normal();
    for (auto& e : embeddings) {
      Tensor p = e.detach();
      for (int64_t i = 0; i < p.size(); ++i) p.data()[i] += eps.data()[i];
      e = p;
    }
  }

  std::vector<dsp::SpectrogramSegment> out_segs = clean_segs;
  for (size_t j = 0; j < clean_segs.size(); ++j) {
    Tensor y = models::segment_to_tensor(clean_segs[j].data);
    Tensor n = bundle.config.condition_embeddings ? embeddings[j % embeddings.size()]
                                                  : Tensor::zeros({bundle.embed_dim});
    Tensor x_g = bundle.generator.forward(y, n, false, nullptr);
    // generated magnitudes must stay inside the compressed range
    for (auto& v : x_g.vec()) {
      if (v < 0.0 || v > 1.0) {
        v = std::clamp(v, 0.0, 1.0);
        if (stats) ++stats->clamped_bins;
      }
    }
    if (stats) stats->total_bins += x_g.size();
    out_segs[j].data = models::tensor_to_matrix(x_g);
  }

  dsp::Spectrogram sim;
  sim.config = bundle.stft_config;
  sim.compression = bundle.compression;
  sim.magnitude = dsp::reassemble(out_segs, total_frames);
  sim.phase = clean_spec.phase;

  dsp::Spectrogram phase_source = clean_spec;
  dsp::Waveform out = dsp::reconstruct_waveform(sim, phase_source, clean.sample_rate);
  out.samples.resize(clean.samples.size(), 0.0);  // trim or zero-pad to the input length
  return out;
}

void save_pairs(const std::vector<SimulatedPair>& pairs, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "save_pairs: cannot open " << path);
  for (const auto& p : pairs) {
    json j;
    j["clean_id"] = p.clean_id;
    j["target_noise_id"] = p.target_noise_id;
    j["sigma_used"] = p.sigma_used;
    j["simulated_waveform_path"] = p.simulated_waveform_path;
    j["clean_waveform_path"] = p.clean_waveform_path;
    f << j.dump() << "\n";
  }
  NS_CHECK(f.good(), IoError, "save_pairs: failed writing " << path);
}

std::vector<SimulatedPair> load_pairs(const std::string& path) {
  std::ifstream f(path);
  NS_CHECK(f.good(), IoError, "load_pairs: cannot open " << path);
  std::vector<SimulatedPair> pairs;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    SimulatedPair p;
    p.clean_id = j.at("clean_id").get<std::string>();
    p.target_noise_id = j.at("target_noise_id").get<std::string>();
    p.sigma_used = j.at("sigma_used").get<double>();
    p.simulated_waveform_path = j.at("simulated_waveform_path").get<std::string>();
    p.clean_waveform_path = j.at("clean_waveform_path").get<std::string>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<SimulatedPair> generate_dataset(const data::Manifest& clean_manifest,
                                            const data::Manifest& target_subset,
                                            const train::GanBundle& bundle,
                                            const GenerateConfig& cfg,
                                            const std::string& out_dir) {
  NS_CHECK(!clean_manifest.empty(), InvalidInput, "generate_dataset: empty clean manifest");
  NS_CHECK(!target_subset.empty(), InvalidInput, "generate_dataset: empty target subset");

  const fs::path root(out_dir);
  const fs::path stamp_path = root / "sim_config.json";
  json stamp{{"seed", cfg.seed},
             {"sigma", cfg.sigma},
             {"clean_count", clean_manifest.size()},
             {"target_count", target_subset.size()}};
  if (fs::exists(root)) {
    bool resumable = false;
    if (fs::exists(stamp_path)) {
      std::ifstream sf(stamp_path);
      json existing;
      sf >> existing;
      resumable = existing == stamp;
    }
    NS_CHECK(resumable || cfg.force, InvalidInput,
             "generate_dataset: " << out_dir
                                  << " holds a different run; pass force to overwrite");
    if (!resumable && cfg.force) fs::remove_all(root);
  }
  fs::create_directories(root / "sim");
  {
    std::ofstream sf(stamp_path, std::ios::trunc);
    sf << stamp.dump(2) << "\n";
  }

  SimulateStats stats;
  std::vector<SimulatedPair> pairs;
  int64_t reused = 0;
  for (const auto& entry : clean_manifest.entries) {
    // target choice and perturbation keyed by the clean id: completion
    // order and resumption cannot change the dataset
    const uint64_t key = hash_tag(entry.utterance_id);
    Rng choice = rng_stream(cfg.seed, "target_choice", key);
    const auto& target =
        target_subset.entries[choice.uniform_int(static_cast<int64_t>(target_subset.size()))];

    SimulatedPair pair;
    pair.clean_id = entry.utterance_id;
    pair.target_noise_id = target.utterance_id;
    pair.sigma_used = cfg.sigma;
    pair.clean_waveform_path = entry.audio_path;
    std::string rel = entry.utterance_id + ".wav";
    std::replace(rel.begin(), rel.end(), '/', '_');
    pair.simulated_waveform_path = (root / "sim" / rel).string();

    if (!fs::exists(pair.simulated_waveform_path)) {
      SimulateOptions opts;
      opts.sigma = cfg.sigma;
      opts.seed = rng_stream(cfg.seed, "utterance_seed", key).next_u64();
      dsp::Waveform sim = simulate_utterance(dsp::read_wav(entry.audio_path),
                                             dsp::read_wav(target.audio_path), bundle, opts,
                                             &stats);
      const std::string tmp = pair.simulated_waveform_path + ".tmp";
      dsp::write_wav(tmp, sim, dsp::WavEncoding::kPcm16);
      fs::rename(tmp, pair.simulated_waveform_path);
    } else {
      ++reused;
    }
    pairs.push_back(std::move(pair));
  }

  save_pairs(pairs, (root / "pairs.jsonl").string());
  if (stats.total_bins > 0)
    NS_LOG << "generate_dataset: " << pairs.size() << " pairs (" << reused
           << " reused), clamp rate " << stats.clamp_rate();
  else
    NS_LOG << "generate_dataset: " << pairs.size() << " pairs (" << reused << " reused)";
  return pairs;
}

}  // namespace noisesim::sim
