// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_LOSSES_LOSSES_HPP_
#define NOISESIM_LOSSES_LOSSES_HPP_

#include <string>
#include <vector>

#include "noisesim/models/encoder.hpp"
#include "noisesim/models/generator.hpp"

namespace noisesim::losses {

// numerical floor inside every log
inline constexpr double kLogFloor = 1e-7;

// The generator term of the adversarial objective. The textbook minimax
// form saturates early in training, so the non-saturating -log D(G) variant
// is the default; both stay selectable.
enum class AdvForm { kNonSaturating, kSaturating };

AdvForm adv_form_from_string(const std::string& s);
std::string adv_form_to_string(AdvForm f);

struct AdvLossResult {
  Tensor adv_d;  // -E[log D(x)] - E[log(1 - D(G))]
  Tensor adv_g;
};

// d_real / d_fake are post-sigmoid patch score maps. Values outside [0,1]
// raise NumericsError; values inside are floored at kLogFloor before logs.
AdvLossResult adv_loss(const Tensor& d_real, const Tensor& d_fake,
                       AdvForm form = AdvForm::kNonSaturating);

// Mean absolute error between a target noise embedding and the embedding
// the backbone recovers from a generated segment. Gradients flow through
// the backbone into the segment; freezing the backbone's parameters is the
// caller's job.
Tensor nse_loss(const Tensor& n_target, const Tensor& x_g,
                const models::EncoderBackbone& backbone);

struct PclConfig {
  int num_layers = 5;
  int negatives = 256;       // J
  int patches_per_layer = 256;  // I
  double temperature = 0.07;
  int proj_hidden = 256;
  int proj_dim = 256;
  // Negative patches come from the input-side representation by default;
  // the alternative draws them from the generated-output representation.
  bool negatives_from_output = false;

  void validate() const {
    NS_CHECK(temperature > 0.0, InvalidInput, "PclConfig: temperature must be positive");
    NS_CHECK(num_layers >= 1 && negatives >= 1 && patches_per_layer >= 1, InvalidInput,
             "PclConfig: counts must be positive");
  }
};

// Per-layer two-layer projection heads shared by both feature sides;
// trained together with the generator.
class PclProjection {
 public:
  PclProjection() = default;
  PclProjection(const std::vector<int>& tap_channels, const PclConfig& cfg, uint64_t seed);

  int layers() const { return static_cast<int>(fc1_.size()); }
  // [N, C_l] patches -> L2-normalized [N, proj_dim]
  Tensor project(int layer, const Tensor& patches) const;
  void collect(ParamMap& pm, const std::string& prefix) const;

 private:
  std::vector<models::LinearLayer> fc1_, fc2_;
};

// Patch-wise contrastive loss over the generator's feature hierarchy:
// mean over sampled locations of an InfoNCE term per layer, summed across
// layers. Location draws come from `rng`, so the loss is reproducible.
Tensor pcl_loss(const models::GeneratorTaps& feats_input,
                const models::GeneratorTaps& feats_output, const PclConfig& cfg,
                const PclProjection& proj, Rng& rng);

struct LossReport {
  int64_t step = 0;
  double adv_d = 0.0;
  double adv_g = 0.0;
  double pcl_src = 0.0;
  double pcl_tgt = 0.0;
  double nse = 0.0;
  double lambda_nse = 10.0;
  double total = 0.0;

  std::string to_json_line() const;
  static LossReport from_json_line(const std::string& line);
};

// Generator-side composition: adv_g + pcl_src + pcl_tgt + lambda * nse.
// A non-finite component raises NumericsError naming it.
Tensor total_loss(const Tensor& adv_g, const Tensor& pcl_src, const Tensor& pcl_tgt,
                  const Tensor& nse, double lambda_nse);

LossReport make_report(int64_t step, double adv_d, double adv_g, double pcl_src, double pcl_tgt,
                       double nse, double lambda_nse);

}  // namespace noisesim::losses

#endif  // NOISESIM_LOSSES_LOSSES_HPP_
