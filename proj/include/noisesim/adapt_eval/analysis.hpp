// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_ADAPT_EVAL_ANALYSIS_HPP_
#define NOISESIM_ADAPT_EVAL_ANALYSIS_HPP_

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "noisesim/data/manifest.hpp"
#include "noisesim/train/bundle.hpp"

namespace noisesim::eval {

// ---- SNR histograms ----

struct HistogramSpec {
  double lo = -10.0;
  double hi = 25.0;
  int bins = 35;
};

struct Histogram {
  std::string name;
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // normalized to sum 1 (zero bins kept)
  std::vector<double> snrs;     // raw per-utterance values
};

// SNR per utterance: manifest snr_db, else the paired estimate when a
// clean reference exists, else the reference-free estimate.
Histogram snr_histogram(const data::Manifest& manifest, const std::string& name,
                        const HistogramSpec& spec = {});

void write_histogram_table(const std::vector<Histogram>& hists, const std::string& path);
void write_histogram_svg(const std::vector<Histogram>& hists, const std::string& path);

// ---- embedding projection ----

// rows of X are embeddings; returns N x 2 coordinates
using Projector = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

void register_projector(const std::string& name, Projector projector);
std::vector<std::string> available_projectors();

struct ProjectionResult {
  Eigen::MatrixXd coords;  // N x 2
  double silhouette = 0.0;  // computed in the original embedding space
};

// >= 2 classes with >= 3 points each; all-identical embeddings raise
// NumericsError (silhouette undefined).
ProjectionResult embedding_projection(const Eigen::MatrixXd& embeddings,
                                      const std::vector<int>& labels,
                                      const std::string& projector = "pca");

double silhouette_score(const Eigen::MatrixXd& x, const std::vector<int>& labels);

void write_projection_svg(const ProjectionResult& result, const std::vector<int>& labels,
                          const std::string& path);
void write_projection_table(const ProjectionResult& result, const std::vector<int>& labels,
                            const std::string& path);

// ---- spectral profiles (simulation quality at desk scale) ----

// mean log1p magnitude per frequency bin over all frames of all files
Eigen::VectorXd spectral_profile(const std::vector<std::string>& wav_paths,
                                 const dsp::StftConfig& cfg = {});
double spectral_profile_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Mean per-target-conditioned profile distance: simulate each clean
// utterance against each target with sigma = 0 and compare the output's
// profile with that target's profile. Sensitive to whether conditioning
// actually differentiates targets.
double conditional_profile_distance(const data::Manifest& clean, const data::Manifest& targets,
                                    const train::GanBundle& bundle, int max_clean = 8,
                                    int max_targets = 8);

// ---- ablations ----

enum class AblationConfig { kFull, kNoNse, kNoEmbeddings };

AblationConfig ablation_from_string(const std::string& s);
std::string ablation_to_string(AblationConfig c);

// kNoNse zeroes lambda_nse; kNoEmbeddings additionally replaces every FiLM
// input with a fixed zero embedding (the reconstruction target would be
// meaningless without embeddings).
train::GanTrainConfig apply_ablation(train::GanTrainConfig base, AblationConfig config);

}  // namespace noisesim::eval

#endif  // NOISESIM_ADAPT_EVAL_ANALYSIS_HPP_
