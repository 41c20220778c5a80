// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/adapt_eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace noisesim::eval {

double si_snr_db(const dsp::Waveform& est, const dsp::Waveform& ref, double ceiling_db) {
  NS_CHECK(est.samples.size() == ref.samples.size(), InvalidInput,
           "si_snr: length mismatch " << est.samples.size() << " vs " << ref.samples.size());
  NS_CHECK(!ref.samples.empty(), InvalidInput, "si_snr: empty input");
  const size_t n = ref.samples.size();
  double mean_e = 0.0, mean_r = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_e += est.samples[i];
    mean_r += ref.samples[i];
  }
  mean_e /= n;
  mean_r /= n;

  double dot = 0.0, ref_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - mean_e;
    const double r = ref.samples[i] - mean_r;
    dot += e * r;
    ref_energy += r * r;
  }
  NS_CHECK(ref_energy > 0.0, InvalidInput, "si_snr: reference has zero energy");
  const double alpha = dot / ref_energy;

  double target_energy = 0.0, error_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - mean_e;
    const double r = ref.samples[i] - mean_r;
    const double t = alpha * r;
    target_energy += t * t;
    error_energy += (e - t) * (e - t);
  }
  if (error_energy <= 0.0 || target_energy <= 0.0) return ceiling_db;
  return std::min(ceiling_db, 10.0 * std::log10(target_energy / error_energy));
}

MetricProviderRegistry MetricProviderRegistry::from_config(const std::string& path) {
  std::ifstream f(path);
  NS_CHECK(f.good(), IoError, "MetricProviderRegistry: cannot open " << path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("MetricProviderRegistry: bad config " + path + ": " + e.what());
  }
  MetricProviderRegistry reg;
  for (const auto& [metric, exe] : j.items())
    reg.register_provider(metric, exe.get<std::string>());
  return reg;
}

void MetricProviderRegistry::register_provider(const std::string& metric,
                                               const std::string& executable) {
  providers_[metric] = executable;
}

std::optional<double> MetricProviderRegistry::compute(const std::string& metric,
                                                      const std::string& ref_wav,
                                                      const std::string& deg_wav) const {
  auto it = providers_.find(metric);
  if (it == providers_.end()) return std::nullopt;
  const std::string cmd = "'" + it->second + "' '" + ref_wav + "' '" + deg_wav + "'";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    NS_WARN << "metric provider '" << metric << "' failed to start: " << cmd;
    return std::nullopt;
  }
  char buf[256];
  std::string out;
  while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
  const int rc = pclose(pipe);
  if (rc != 0) {
    NS_WARN << "metric provider '" << metric << "' exited with " << rc;
    return std::nullopt;
  }
  try {
    return std::stod(out);
  } catch (const std::exception&) {
    NS_WARN << "metric provider '" << metric << "' produced unparseable output: " << out;
    return std::nullopt;
  }
}

}  // namespace noisesim::eval
