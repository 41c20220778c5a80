// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_SIMULATE_SIMULATE_HPP_
#define NOISESIM_SIMULATE_SIMULATE_HPP_

#include <string>
#include <vector>

#include "noisesim/data/manifest.hpp"
#include "noisesim/train/bundle.hpp"

namespace noisesim::sim {

struct PerturbationConfig {
  double sigma = 2.0;
  uint64_t rng_seed = 0;
};

// n' = n + eps with eps ~ N(0, sigma^2 I); sigma = 0 returns n unchanged.
Tensor perturb_embedding(const Tensor& n, const PerturbationConfig& cfg);
Tensor perturb_embedding(const Tensor& n, double sigma, Rng& rng);

struct SimulateOptions {
  double sigma = 2.0;
  uint64_t seed = 0;
};

struct SimulateStats {
  int64_t clamped_bins = 0;
  int64_t total_bins = 0;
  double clamp_rate() const {
    return total_bins ? static_cast<double>(clamped_bins) / total_bins : 0.0;
  }
};

// Domain conversion for one utterance: embed the target utterance's
// segments, perturb once per utterance, run the generator per clean
// segment (cycling target-segment embeddings), reassemble, and rebuild a
// waveform with the clean utterance's phase. Output length equals the
// clean input length.
dsp::Waveform simulate_utterance(const dsp::Waveform& clean, const dsp::Waveform& target,
                                 const train::GanBundle& bundle, const SimulateOptions& opts,
                                 SimulateStats* stats = nullptr);

struct SimulatedPair {
  std::string clean_id;
  std::string target_noise_id;
  double sigma_used = 0.0;
  std::string simulated_waveform_path;
  std::string clean_waveform_path;
};

void save_pairs(const std::vector<SimulatedPair>& pairs, const std::string& path);
std::vector<SimulatedPair> load_pairs(const std::string& path);

struct GenerateConfig {
  double sigma = 2.0;
  uint64_t seed = 0;
  bool force = false;
};

// One simulated utterance per clean utterance; the target utterance is a
// seeded uniform choice keyed by the clean id, so interrupted runs resume
// to the identical dataset. Emits <out_dir>/sim/... wavs and
// <out_dir>/pairs.jsonl.
std::vector<SimulatedPair> generate_dataset(const data::Manifest& clean_manifest,
                                            const data::Manifest& target_subset,
                                            const train::GanBundle& bundle,
                                            const GenerateConfig& cfg,
                                            const std::string& out_dir);

}  // namespace noisesim::sim

#endif  // NOISESIM_SIMULATE_SIMULATE_HPP_
