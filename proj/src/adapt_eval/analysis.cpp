// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/adapt_eval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "noisesim/dsp/wav.hpp"
#include "noisesim/simulate/simulate.hpp"

namespace noisesim::eval {

Histogram snr_histogram(const data::Manifest& manifest, const std::string& name,
                        const HistogramSpec& spec) {
  NS_CHECK(spec.bins >= 1 && spec.hi > spec.lo, InvalidInput, "snr_histogram: bad spec");
  Histogram h;
  h.name = name;
  h.edges.resize(spec.bins + 1);
  const double width = (spec.hi - spec.lo) / spec.bins;
  for (int i = 0; i <= spec.bins; ++i) h.edges[i] = spec.lo + i * width;
  h.density.assign(spec.bins, 0.0);

  for (const auto& e : manifest.entries) {
    double snr;
    if (e.snr_db) {
      snr = *e.snr_db;
    } else if (e.clean_path) {
      snr = dsp::estimate_snr(dsp::read_wav(e.audio_path), dsp::read_wav(*e.clean_path));
    } else {
      snr = dsp::estimate_snr_unpaired(dsp::read_wav(e.audio_path));
    }
    h.snrs.push_back(snr);
    int bin = static_cast<int>((snr - spec.lo) / width);
    bin = std::clamp(bin, 0, spec.bins - 1);
    h.density[bin] += 1.0;
  }
  if (!h.snrs.empty())
    for (auto& d : h.density) d /= static_cast<double>(h.snrs.size());
  return h;
}

void write_histogram_table(const std::vector<Histogram>& hists, const std::string& path) {
  NS_CHECK(!hists.empty(), InvalidInput, "write_histogram_table: no histograms");
  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "write_histogram_table: cannot open " << path);
  f << "bin_lo\tbin_hi";
  for (const auto& h : hists) f << "\t" << h.name;
  f << "\n";
  const auto& edges = hists.front().edges;
  for (size_t b = 0; b + 1 < edges.size(); ++b) {
    f << edges[b] << "\t" << edges[b + 1];
    for (const auto& h : hists) f << "\t" << h.density[b];
    f << "\n";
  }
  NS_CHECK(f.good(), IoError, "write_histogram_table: failed writing " << path);
}

namespace {
const char* kSeriesColors[] = {"#3366cc", "#dc3912", "#ff9900", "#109618", "#990099"};
}

void write_histogram_svg(const std::vector<Histogram>& hists, const std::string& path) {
  NS_CHECK(!hists.empty(), InvalidInput, "write_histogram_svg: no histograms");
  const int width = 640, height = 400, margin = 50;
  double max_density = 1e-9;
  for (const auto& h : hists)
    for (double d : h.density) max_density = std::max(max_density, d);

  const auto& edges = hists.front().edges;
  const double lo = edges.front(), hi = edges.back();
  auto sx = [&](double v) {
    return margin + (v - lo) / (hi - lo) * (width - 2 * margin);
  };
  auto sy = [&](double d) { return height - margin - d / max_density * (height - 2 * margin); };

  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "write_histogram_svg: cannot open " << path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
    << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  f << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
    << "' y2='" << height - margin << "' stroke='black'/>\n";
  f << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
    << height - margin << "' stroke='black'/>\n";
  for (double v = std::ceil(lo / 5) * 5; v <= hi; v += 5) {
    f << "<text x='" << sx(v) << "' y='" << height - margin + 16
      << "' font-size='10' text-anchor='middle'>" << v << "</text>\n";
  }
  f << "<text x='" << width / 2 << "' y='" << height - 10
    << "' font-size='12' text-anchor='middle'>SNR (dB)</text>\n";

  for (size_t i = 0; i < hists.size(); ++i) {
    const auto& h = hists[i];
    const char* color = kSeriesColors[i % 5];
    f << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (size_t b = 0; b + 1 < h.edges.size(); ++b) {
      const double cx = 0.5 * (h.edges[b] + h.edges[b + 1]);
      f << sx(cx) << "," << sy(h.density[b]) << " ";
    }
    f << "'/>\n";
    f << "<text x='" << width - margin - 150 << "' y='" << margin + 16 * i
      << "' font-size='11' fill='" << color << "'>" << h.name << " (n=" << h.snrs.size()
      << ")</text>\n";
  }
  f << "</svg>\n";
  NS_CHECK(f.good(), IoError, "write_histogram_svg: failed writing " << path);
}

namespace {

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / std::max<int>(1, x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  NS_CHECK(es.info() == Eigen::Success, NumericsError, "pca: eigendecomposition failed");
  const int d = static_cast<int>(x.cols());
  Eigen::MatrixXd top(d, 2);
  top.col(0) = es.eigenvectors().col(d - 1);
  top.col(1) = d >= 2 ? es.eigenvectors().col(d - 2) : es.eigenvectors().col(d - 1);
  return centered * top;
}

std::map<std::string, Projector>& projector_registry() {
  static std::map<std::string, Projector> reg = {{"pca", pca_project}};
  return reg;
}

}  // namespace

void register_projector(const std::string& name, Projector projector) {
  projector_registry()[name] = std::move(projector);
}

std::vector<std::string> available_projectors() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : projector_registry()) names.push_back(name);
  return names;
}

double silhouette_score(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const int n = static_cast<int>(x.rows());
  NS_CHECK(static_cast<int>(labels.size()) == n, ShapeError, "silhouette: label count mismatch");
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
  NS_CHECK(clusters.size() >= 2, InvalidInput, "silhouette: need at least two classes");
  for (const auto& [label, members] : clusters)
    NS_CHECK(members.size() >= 3, InvalidInput,
             "silhouette: class " << label << " has fewer than 3 points");

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (x.row(i) - x.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  NS_CHECK(dist.maxCoeff() > 0.0, NumericsError,
           "silhouette: undefined for all-identical embeddings");

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double a = 0.0;
    const auto& own = clusters.at(labels[i]);
    for (int j : own)
      if (j != i) a += dist(i, j);
    a /= static_cast<double>(own.size() - 1);

    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[i]) continue;
      double m = 0.0;
      for (int j : members) m += dist(i, j);
      b = std::min(b, m / static_cast<double>(members.size()));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / n;
}

ProjectionResult embedding_projection(const Eigen::MatrixXd& embeddings,
                                      const std::vector<int>& labels,
                                      const std::string& projector) {
  for (int i = 0; i < embeddings.size(); ++i)
    NS_CHECK(std::isfinite(embeddings.data()[i]), InvalidInput,
             "embedding_projection: non-finite embedding entry");
  auto it = projector_registry().find(projector);
  NS_CHECK(it != projector_registry().end(), ConfigError,
           "embedding_projection: no projector named '" << projector << "'");
  ProjectionResult r;
  r.silhouette = silhouette_score(embeddings, labels);  // original space
  r.coords = it->second(embeddings);
  NS_CHECK(r.coords.rows() == embeddings.rows() && r.coords.cols() == 2, ShapeError,
           "embedding_projection: projector returned wrong shape");
  return r;
}

void write_projection_table(const ProjectionResult& result, const std::vector<int>& labels,
                            const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "write_projection_table: cannot open " << path);
  f << "# silhouette\t" << result.silhouette << "\n";
  f << "x\ty\tlabel\n";
  for (int i = 0; i < result.coords.rows(); ++i)
    f << result.coords(i, 0) << "\t" << result.coords(i, 1) << "\t" << labels[i] << "\n";
}

void write_projection_svg(const ProjectionResult& result, const std::vector<int>& labels,
                          const std::string& path) {
  const int width = 480, height = 480, margin = 30;
  const auto& c = result.coords;
  const double xlo = c.col(0).minCoeff(), xhi = c.col(0).maxCoeff();
  const double ylo = c.col(1).minCoeff(), yhi = c.col(1).maxCoeff();
  auto sx = [&](double v) {
    return margin + (v - xlo) / std::max(1e-12, xhi - xlo) * (width - 2 * margin);
  };
  auto sy = [&](double v) {
    return height - margin - (v - ylo) / std::max(1e-12, yhi - ylo) * (height - 2 * margin);
  };
  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "write_projection_svg: cannot open " << path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
    << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  for (int i = 0; i < c.rows(); ++i)
    f << "<circle cx='" << sx(c(i, 0)) << "' cy='" << sy(c(i, 1)) << "' r='4' fill='"
      << kSeriesColors[labels[i] % 5] << "'/>\n";
  f << "<text x='" << margin << "' y='" << 18 << "' font-size='12'>silhouette = "
    << result.silhouette << "</text>\n</svg>\n";
}

Eigen::VectorXd spectral_profile(const std::vector<std::string>& wav_paths,
                                 const dsp::StftConfig& cfg) {
  NS_CHECK(!wav_paths.empty(), InvalidInput, "spectral_profile: no files");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg.bins());
  int64_t frames = 0;
  for (const auto& p : wav_paths) {
    dsp::Spectrogram s = dsp::stft(dsp::read_wav(p), cfg);
    for (int t = 0; t < s.frames(); ++t)
      acc += s.magnitude.col(t).unaryExpr([](double m) { return std::log1p(m); });
    frames += s.frames();
  }
  return acc / static_cast<double>(frames);
}

double spectral_profile_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  NS_CHECK(a.size() == b.size(), ShapeError, "spectral_profile_distance: size mismatch");
  return (a - b).cwiseAbs().mean();
}

double conditional_profile_distance(const data::Manifest& clean, const data::Manifest& targets,
                                    const train::GanBundle& bundle, int max_clean,
                                    int max_targets) {
  const int nc = std::min<int>(max_clean, static_cast<int>(clean.size()));
  const int nt = std::min<int>(max_targets, static_cast<int>(targets.size()));
  NS_CHECK(nc > 0 && nt > 0, InvalidInput, "conditional_profile_distance: empty manifests");

  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / "noisesim_profile_tmp";
  fs::create_directories(tmp);

  double total = 0.0;
  int count = 0;
  for (int t = 0; t < nt; ++t) {
    const auto& target = targets.entries[t];
    const Eigen::VectorXd target_profile =
        spectral_profile({target.audio_path}, bundle.stft_config);
    for (int i = 0; i < nc; ++i) {
      sim::SimulateOptions opts;
      opts.sigma = 0.0;
      opts.seed = 0;
      dsp::Waveform out = sim::simulate_utterance(dsp::read_wav(clean.entries[i].audio_path),
                                                  dsp::read_wav(target.audio_path), bundle, opts);
      const std::string path = (tmp / "sim.wav").string();
      dsp::write_wav(path, out, dsp::WavEncoding::kFloat32);
      total += spectral_profile_distance(spectral_profile({path}, bundle.stft_config),
                                         target_profile);
      ++count;
    }
  }
  fs::remove_all(tmp);
  return total / count;
}

AblationConfig ablation_from_string(const std::string& s) {
  if (s == "full") return AblationConfig::kFull;
  if (s == "no_nse") return AblationConfig::kNoNse;
  if (s == "no_embeddings") return AblationConfig::kNoEmbeddings;
  throw InvalidInput("unknown ablation config: " + s);
}

std::string ablation_to_string(AblationConfig c) {
  switch (c) {
    case AblationConfig::kFull:
      return "full";
    case AblationConfig::kNoNse:
      return "no_nse";
    case AblationConfig::kNoEmbeddings:
      return "no_embeddings";
  }
  return "full";
}

train::GanTrainConfig apply_ablation(train::GanTrainConfig base, AblationConfig config) {
  switch (config) {
    case AblationConfig::kFull:
      break;
    case AblationConfig::kNoNse:
      base.lambda_nse = 0.0;
      break;
    case AblationConfig::kNoEmbeddings:
      base.lambda_nse = 0.0;
      base.condition_embeddings = false;
      break;
  }
  return base;
}

}  // namespace noisesim::eval
