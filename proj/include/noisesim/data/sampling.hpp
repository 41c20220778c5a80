// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_DATA_SAMPLING_HPP_
#define NOISESIM_DATA_SAMPLING_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "noisesim/core/rng.hpp"
#include "noisesim/data/manifest.hpp"
#include "noisesim/dsp/stft.hpp"

namespace noisesim::data {

// Per-utterance compressed magnitude spectrograms loaded once and sampled
// many times. Utterances shorter than one full segment are skipped with a
// warning so that training never sees zero-padded frames.
struct SegmentPool {
  struct Item {
    std::string utterance_id;
    Eigen::MatrixXd magnitude;  // compressed, bins x frames
  };
  std::vector<Item> items;
  dsp::StftConfig stft_config;
  dsp::Compression compression;

  size_t size() const { return items.size(); }
};

// Fits corpus-level compression constants over every utterance in the
// given manifests (linear-domain magnitudes).
dsp::Compression fit_compression(const std::vector<const Manifest*>& manifests,
                                 const dsp::StftConfig& cfg = {});

SegmentPool build_pool(const Manifest& manifest, const dsp::StftConfig& cfg,
                       const dsp::Compression& compression);

struct UnpairedBatch {
  std::vector<dsp::SpectrogramSegment> clean;
  std::vector<dsp::SpectrogramSegment> noisy;
  std::vector<std::string> noisy_utterance_ids;
};

// Deterministic unpaired batch stream: each utterance of each pool is
// visited once per epoch (per pool permutation), segment offsets are
// random crops redrawn every epoch, and the whole stream is a pure
// function of (pools, seed, epoch).
class EpochSampler {
 public:
  EpochSampler(const SegmentPool* clean, const SegmentPool* noisy, int batch_size, uint64_t seed,
               int64_t epoch);

  int64_t batches() const { return steps_; }
  bool next(UnpairedBatch* out);

 private:
  const SegmentPool* clean_;
  const SegmentPool* noisy_;
  int batch_size_;
  int64_t steps_;
  int64_t cursor_ = 0;
  std::vector<int> clean_perm_;
  std::vector<int> noisy_perm_;
  Rng offset_rng_;
};

}  // namespace noisesim::data

#endif  // NOISESIM_DATA_SAMPLING_HPP_
