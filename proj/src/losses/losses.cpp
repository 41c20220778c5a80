// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/losses/losses.hpp"

#include <cmath>

#include "json.hpp"

namespace noisesim::losses {

using nlohmann::json;

AdvForm adv_form_from_string(const std::string& s) {
  if (s == "nonsaturating") return AdvForm::kNonSaturating;
  if (s == "saturating") return AdvForm::kSaturating;
  throw InvalidInput("unknown adversarial form: " + s);
}

std::string adv_form_to_string(AdvForm f) {
  return f == AdvForm::kNonSaturating ? "nonsaturating" : "saturating";
}

namespace {
void check_scores(const Tensor& t, const char* name) {
  for (int64_t i = 0; i < t.size(); ++i) {
    const double v = t.data()[i];
    NS_CHECK(std::isfinite(v) && v >= 0.0 && v <= 1.0, NumericsError,
             "adv_loss: " << name << " score " << v << " outside [0,1]");
  }
}
}  // namespace

AdvLossResult adv_loss(const Tensor& d_real, const Tensor& d_fake, AdvForm form) {
  check_scores(d_real, "real");
  check_scores(d_fake, "fake");
  AdvLossResult r;
  r.adv_d = add(mean_neg_log(d_real, kLogFloor), mean_neg_log(one_minus(d_fake), kLogFloor));
  if (form == AdvForm::kNonSaturating) {
    r.adv_g = mean_neg_log(d_fake, kLogFloor);
  } else {
    // generator minimizes E[log(1 - D(G))] as written
    r.adv_g = mul_scalar(mean_neg_log(one_minus(d_fake), kLogFloor), -1.0);
  }
  return r;
}

Tensor nse_loss(const Tensor& n_target, const Tensor& x_g,
                const models::EncoderBackbone& backbone) {
  NS_CHECK(n_target.rank() == 1 && n_target.dim(0) == backbone.embed_dim(), ShapeError,
           "nse_loss: target embedding " << shape_str(n_target.shape()) << " vs backbone dim "
                                         << backbone.embed_dim());
  Tensor recovered = models::encoder_embed(backbone, x_g);
  return l1_loss(n_target, recovered);
}

PclProjection::PclProjection(const std::vector<int>& tap_channels, const PclConfig& cfg,
                             uint64_t seed) {
  cfg.validate();
  NS_CHECK(static_cast<int>(tap_channels.size()) == cfg.num_layers, ConfigError,
           "PclProjection: " << tap_channels.size() << " tap layers vs configured "
                             << cfg.num_layers);
  Rng rng = rng_stream(seed, "pcl_projection_init");
  for (int c : tap_channels) {
    fc1_.push_back(models::LinearLayer::create(c, cfg.proj_hidden, rng, std::sqrt(1.0 / c)));
    fc2_.push_back(models::LinearLayer::create(cfg.proj_hidden, cfg.proj_dim, rng,
                                               std::sqrt(1.0 / cfg.proj_hidden)));
  }
}

Tensor PclProjection::project(int layer, const Tensor& patches) const {
  NS_CHECK(layer >= 0 && layer < layers(), InvalidInput, "PclProjection: layer out of range");
  Tensor h = relu(fc1_[layer].forward(patches));
  return l2_normalize_rows(fc2_[layer].forward(h));
}

void PclProjection::collect(ParamMap& pm, const std::string& prefix) const {
  for (int l = 0; l < layers(); ++l) {
    fc1_[l].collect(pm, prefix + "layer" + std::to_string(l) + ".fc1");
    fc2_[l].collect(pm, prefix + "layer" + std::to_string(l) + ".fc2");
  }
}

Tensor pcl_loss(const models::GeneratorTaps& feats_input,
                const models::GeneratorTaps& feats_output, const PclConfig& cfg,
                const PclProjection& proj, Rng& rng) {
  cfg.validate();
  const int L = cfg.num_layers;
  NS_CHECK(static_cast<int>(feats_input.layers.size()) == L &&
               static_cast<int>(feats_output.layers.size()) == L,
           ShapeError, "pcl_loss: expected " << L << " feature layers");
  NS_CHECK(proj.layers() == L, ConfigError, "pcl_loss: projection has wrong layer count");

  Tensor total;
  for (int l = 0; l < L; ++l) {
    const Tensor& fin = feats_input.layers[l];
    const Tensor& fout = feats_output.layers[l];
    NS_CHECK(fin.shape() == fout.shape(), ShapeError,
             "pcl_loss: layer " << l << " shapes differ: " << shape_str(fin.shape()) << " vs "
                                << shape_str(fout.shape()));
    const int spatial = fin.dim(1) * fin.dim(2);
    const int I = cfg.patches_per_layer, J = cfg.negatives;

    std::vector<int> query_locs(I), neg_locs(J);
    if (spatial >= I + J) {
      // one disjoint draw: queries first, then negatives from other locations
      std::vector<int> perm = rng.permutation(spatial);
      for (int i = 0; i < I; ++i) query_locs[i] = perm[i];
      for (int j = 0; j < J; ++j) neg_locs[j] = perm[I + j];
    } else {
      NS_WARN << "pcl_loss: layer " << l << " has " << spatial << " locations < I+J = " << I + J
              << "; sampling with replacement";
      for (int i = 0; i < I; ++i) query_locs[i] = static_cast<int>(rng.uniform_int(spatial));
      for (int j = 0; j < J; ++j) neg_locs[j] = static_cast<int>(rng.uniform_int(spatial));
    }

    Tensor queries = proj.project(l, gather_locations(fout, query_locs));
    Tensor positives = proj.project(l, gather_locations(fin, query_locs));
    const Tensor& neg_source = cfg.negatives_from_output ? fout : fin;
    Tensor negatives = proj.project(l, gather_locations(neg_source, neg_locs));

    Tensor pos_sim = rowwise_dot(queries, positives);     // [I]
    Tensor neg_sim = matmul_nt(queries, negatives);       // [I,J]
    Tensor layer_loss = info_nce(pos_sim, neg_sim, cfg.temperature);
    total = total.defined() ? add(total, layer_loss) : layer_loss;
  }
  return total;
}

namespace {
void check_finite(const Tensor& t, const char* name) {
  NS_CHECK(std::isfinite(t.item()), NumericsError,
           "total_loss: component '" << name << "' is non-finite (" << t.item() << ")");
}
}  // namespace

Tensor total_loss(const Tensor& adv_g, const Tensor& pcl_src, const Tensor& pcl_tgt,
                  const Tensor& nse, double lambda_nse) {
  check_finite(adv_g, "adv_g");
  check_finite(pcl_src, "pcl_src");
  check_finite(pcl_tgt, "pcl_tgt");
  check_finite(nse, "nse");
  return add(add(adv_g, pcl_src), add(pcl_tgt, mul_scalar(nse, lambda_nse)));
}

LossReport make_report(int64_t step, double adv_d, double adv_g, double pcl_src, double pcl_tgt,
                       double nse, double lambda_nse) {
  LossReport r;
  r.step = step;
  r.adv_d = adv_d;
  r.adv_g = adv_g;
  r.pcl_src = pcl_src;
  r.pcl_tgt = pcl_tgt;
  r.nse = nse;
  r.lambda_nse = lambda_nse;
  r.total = adv_g + pcl_src + pcl_tgt + lambda_nse * nse;
  for (double v : {r.adv_d, r.adv_g, r.pcl_src, r.pcl_tgt, r.nse, r.total})
    NS_CHECK(std::isfinite(v), NumericsError, "LossReport: non-finite component at step " << step);
  return r;
}

std::string LossReport::to_json_line() const {
  json j;
  j["step"] = step;
  j["adv_d"] = adv_d;
  j["adv_g"] = adv_g;
  j["pcl_src"] = pcl_src;
  j["pcl_tgt"] = pcl_tgt;
  j["nse"] = nse;
  j["lambda_nse"] = lambda_nse;
  j["total"] = total;
  return j.dump();
}

LossReport LossReport::from_json_line(const std::string& line) {
  json j = json::parse(line);
  LossReport r;
  r.step = j.at("step").get<int64_t>();
  r.adv_d = j.at("adv_d").get<double>();
  r.adv_g = j.at("adv_g").get<double>();
  r.pcl_src = j.at("pcl_src").get<double>();
  r.pcl_tgt = j.at("pcl_tgt").get<double>();
  r.nse = j.at("nse").get<double>();
  r.lambda_nse = j.at("lambda_nse").get<double>();
  r.total = j.at("total").get<double>();
  return r;
}

}  // namespace noisesim::losses
