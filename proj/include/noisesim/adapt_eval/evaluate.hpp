// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_ADAPT_EVAL_EVALUATE_HPP_
#define NOISESIM_ADAPT_EVAL_EVALUATE_HPP_

#include <set>
#include <string>
#include <vector>

#include "noisesim/adapt_eval/metrics.hpp"
#include "noisesim/adapt_eval/se_backend.hpp"
#include "noisesim/data/manifest.hpp"
#include "noisesim/simulate/simulate.hpp"

namespace noisesim::eval {

inline const std::vector<double> kDefaultSnrBuckets = {2.5, 7.5, 12.5, 17.5};

struct UtteranceMetrics {
  std::string utterance_id;
  double snr_bucket = 0.0;
  double si_snr = 0.0;
  std::optional<double> pesq;
  std::optional<double> stoi;
};

struct BucketAggregate {
  double bucket = 0.0;
  int count = 0;
  double si_snr = 0.0;
  std::optional<double> pesq;
  std::optional<double> stoi;
};

struct MetricReport {
  std::vector<UtteranceMetrics> per_utterance;
  std::vector<BucketAggregate> buckets;  // one per requested bucket, empty kept at zero
  double mean_si_snr = 0.0;
  std::optional<double> mean_pesq;
  std::optional<double> mean_stoi;
  int evaluated = 0;
  int skipped = 0;

  std::string to_table() const;  // delimiter-separated text
};

// Enhances every test utterance (entries must carry a paired clean
// reference) and aggregates per SNR bucket. Bucket assignment uses the
// entry's snr_db when present, otherwise the paired estimate, snapped to
// the nearest requested bucket.
MetricReport evaluate(SeBackend& backend, const data::Manifest& test,
                      const std::set<std::string>& metrics = {"si_snr"},
                      const MetricProviderRegistry* providers = nullptr,
                      const std::vector<double>& buckets = kDefaultSnrBuckets);

// Supervised fine-tuning on simulated (noisy, clean) pairs; batch one,
// pair order reshuffled per epoch.
void finetune_se(SeBackend& backend, const std::vector<sim::SimulatedPair>& pairs, int epochs = 2,
                 uint64_t seed = 0, std::vector<double>* loss_curve = nullptr);

}  // namespace noisesim::eval

#endif  // NOISESIM_ADAPT_EVAL_EVALUATE_HPP_
