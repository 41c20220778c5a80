// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/adapt_eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "noisesim/core/rng.hpp"
#include "noisesim/dsp/wav.hpp"

namespace noisesim::eval {

namespace fs = std::filesystem;

namespace {

double nearest_bucket(double snr, const std::vector<double>& buckets) {
  double best = buckets.front();
  for (double b : buckets)
    if (std::abs(snr - b) < std::abs(snr - best)) best = b;
  return best;
}

}  // namespace

MetricReport evaluate(SeBackend& backend, const data::Manifest& test,
                      const std::set<std::string>& metrics,
                      const MetricProviderRegistry* providers,
                      const std::vector<double>& buckets) {
  NS_CHECK(!test.empty(), InvalidInput, "evaluate: empty test manifest");
  NS_CHECK(!buckets.empty(), InvalidInput, "evaluate: no SNR buckets");

  const bool want_pesq = metrics.count("pesq") > 0;
  const bool want_stoi = metrics.count("stoi") > 0;
  fs::path tmp_dir;
  if (want_pesq || want_stoi) {
    tmp_dir = fs::temp_directory_path() / "noisesim_eval_tmp";
    fs::create_directories(tmp_dir);
  }
  bool warned_pesq = false, warned_stoi = false;

  MetricReport report;
  for (const auto& entry : test.entries) {
    NS_CHECK(entry.clean_path.has_value(), InvalidInput,
             "evaluate: test utterance " << entry.utterance_id << " has no paired clean_path");
    const dsp::Waveform noisy = dsp::read_wav(entry.audio_path);
    const dsp::Waveform clean = dsp::read_wav(*entry.clean_path);
    if (noisy.samples.size() != clean.samples.size()) {
      NS_WARN << "evaluate: skipping " << entry.utterance_id << ": noisy/clean length mismatch";
      ++report.skipped;
      continue;
    }

    dsp::Waveform enhanced;
    try {
      enhanced = backend.enhance(noisy);
    } catch (const std::exception& e) {
      NS_WARN << "evaluate: skipping " << entry.utterance_id << ": " << e.what();
      ++report.skipped;
      continue;
    }
    if (enhanced.samples.size() != clean.samples.size()) {
      NS_WARN << "evaluate: skipping " << entry.utterance_id
              << ": enhanced length mismatch (got " << enhanced.samples.size() << ", want "
              << clean.samples.size() << ")";
      ++report.skipped;
      continue;
    }

    UtteranceMetrics um;
    um.utterance_id = entry.utterance_id;
    const double snr =
        entry.snr_db ? *entry.snr_db : dsp::estimate_snr(noisy, clean);
    um.snr_bucket = nearest_bucket(snr, buckets);
    um.si_snr = si_snr_db(enhanced, clean);

    if (want_pesq || want_stoi) {
      const std::string ref = (tmp_dir / (std::to_string(report.evaluated) + "_ref.wav")).string();
      const std::string deg = (tmp_dir / (std::to_string(report.evaluated) + "_deg.wav")).string();
      dsp::write_wav(ref, clean, dsp::WavEncoding::kFloat32);
      dsp::write_wav(deg, enhanced, dsp::WavEncoding::kFloat32);
      if (want_pesq) {
        if (providers && providers->has("pesq")) {
          um.pesq = providers->compute("pesq", ref, deg);
        } else if (!warned_pesq) {
          NS_WARN << "evaluate: no pesq provider registered; reporting pesq as absent";
          warned_pesq = true;
        }
      }
      if (want_stoi) {
        if (providers && providers->has("stoi")) {
          um.stoi = providers->compute("stoi", ref, deg);
        } else if (!warned_stoi) {
          NS_WARN << "evaluate: no stoi provider registered; reporting stoi as absent";
          warned_stoi = true;
        }
      }
      fs::remove(ref);
      fs::remove(deg);
    }

    report.per_utterance.push_back(std::move(um));
    ++report.evaluated;
  }
  NS_CHECK(report.evaluated > 0, InvalidInput, "evaluate: no utterance could be evaluated");

  for (double b : buckets) {
    BucketAggregate agg;
    agg.bucket = b;
    double pesq_sum = 0.0, stoi_sum = 0.0;
    int pesq_n = 0, stoi_n = 0;
    for (const auto& um : report.per_utterance) {
      if (um.snr_bucket != b) continue;
      ++agg.count;
      agg.si_snr += um.si_snr;
      if (um.pesq) {
        pesq_sum += *um.pesq;
        ++pesq_n;
      }
      if (um.stoi) {
        stoi_sum += *um.stoi;
        ++stoi_n;
      }
    }
    if (agg.count > 0) agg.si_snr /= agg.count;
    if (pesq_n > 0) agg.pesq = pesq_sum / pesq_n;
    if (stoi_n > 0) agg.stoi = stoi_sum / stoi_n;
    report.buckets.push_back(agg);
  }

  double si_sum = 0.0, pesq_sum = 0.0, stoi_sum = 0.0;
  int pesq_n = 0, stoi_n = 0;
  for (const auto& um : report.per_utterance) {
    si_sum += um.si_snr;
    if (um.pesq) {
      pesq_sum += *um.pesq;
      ++pesq_n;
    }
    if (um.stoi) {
      stoi_sum += *um.stoi;
      ++stoi_n;
    }
  }
  report.mean_si_snr = si_sum / report.evaluated;
  if (pesq_n > 0) report.mean_pesq = pesq_sum / pesq_n;
  if (stoi_n > 0) report.mean_stoi = stoi_sum / stoi_n;
  return report;
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  os << "bucket_db\tcount\tsi_snr_db\tpesq\tstoi\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("-");
  };
  for (const auto& b : buckets)
    os << b.bucket << "\t" << b.count << "\t" << b.si_snr << "\t" << opt(b.pesq) << "\t"
       << opt(b.stoi) << "\n";
  os << "overall\t" << evaluated << "\t" << mean_si_snr << "\t" << opt(mean_pesq) << "\t"
     << opt(mean_stoi) << "\n";
  return os.str();
}

void finetune_se(SeBackend& backend, const std::vector<sim::SimulatedPair>& pairs, int epochs,
                 uint64_t seed, std::vector<double>* loss_curve) {
  NS_CHECK(!pairs.empty(), InvalidInput, "finetune_se: empty pair list");
  NS_CHECK(backend.trainable(), ConfigError, "finetune_se: backend is not trainable");
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng rng = rng_stream(seed, "se_finetune", static_cast<uint64_t>(epoch));
    std::vector<int> order = rng.permutation(static_cast<int>(pairs.size()));
    for (int idx : order) {
      const auto& pair = pairs[idx];
      dsp::Waveform noisy = dsp::read_wav(pair.simulated_waveform_path);
      dsp::Waveform clean = dsp::read_wav(pair.clean_waveform_path);
      const size_t n = std::min(noisy.samples.size(), clean.samples.size());
      noisy.samples.resize(n);
      clean.samples.resize(n);
      const double loss = backend.train_step(noisy, clean);
      if (loss_curve) loss_curve->push_back(loss);
    }
  }
}

}  // namespace noisesim::eval
