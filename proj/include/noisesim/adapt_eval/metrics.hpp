// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_ADAPT_EVAL_METRICS_HPP_
#define NOISESIM_ADAPT_EVAL_METRICS_HPP_

#include <map>
#include <optional>
#include <string>

#include "noisesim/dsp/stft.hpp"

namespace noisesim::eval {

inline constexpr double kSiSnrCeilingDb = 60.0;

// Scale-invariant SNR in dB, capped at the report ceiling.
double si_snr_db(const dsp::Waveform& est, const dsp::Waveform& ref,
                 double ceiling_db = kSiSnrCeilingDb);

// External metric tools (PESQ, STOI, ...): a JSON config maps metric names
// to executables invoked as `exe <clean_ref.wav> <processed.wav>`, printing
// one float on stdout. Absent metrics are skipped with a warning.
class MetricProviderRegistry {
 public:
  MetricProviderRegistry() = default;
  static MetricProviderRegistry from_config(const std::string& path);

  void register_provider(const std::string& metric, const std::string& executable);
  bool has(const std::string& metric) const { return providers_.count(metric) > 0; }
  std::optional<double> compute(const std::string& metric, const std::string& ref_wav,
                                const std::string& deg_wav) const;

 private:
  std::map<std::string, std::string> providers_;
};

}  // namespace noisesim::eval

#endif  // NOISESIM_ADAPT_EVAL_METRICS_HPP_
