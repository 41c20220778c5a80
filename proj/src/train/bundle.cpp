// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/train/bundle.hpp"

namespace noisesim::train {

using nlohmann::json;

json GanTrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["batch_size"] = batch_size;
  j["lambda_nse"] = lambda_nse;
  j["seed"] = seed;
  j["adv_form"] = losses::adv_form_to_string(adv_form);
  j["checkpoint_every"] = checkpoint_every;
  j["condition_embeddings"] = condition_embeddings;
  j["pcl"] = {{"num_layers", pcl.num_layers},
              {"negatives", pcl.negatives},
              {"patches_per_layer", pcl.patches_per_layer},
              {"temperature", pcl.temperature},
              {"proj_hidden", pcl.proj_hidden},
              {"proj_dim", pcl.proj_dim},
              {"negatives_from_output", pcl.negatives_from_output}};
  return j;
}

GanTrainConfig GanTrainConfig::from_json(const json& j) {
  GanTrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lambda_nse = j.at("lambda_nse").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.adv_form = losses::adv_form_from_string(j.at("adv_form").get<std::string>());
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  c.condition_embeddings = j.at("condition_embeddings").get<bool>();
  const json& p = j.at("pcl");
  c.pcl.num_layers = p.at("num_layers").get<int>();
  c.pcl.negatives = p.at("negatives").get<int>();
  c.pcl.patches_per_layer = p.at("patches_per_layer").get<int>();
  c.pcl.temperature = p.at("temperature").get<double>();
  c.pcl.proj_hidden = p.at("proj_hidden").get<int>();
  c.pcl.proj_dim = p.at("proj_dim").get<int>();
  c.pcl.negatives_from_output = p.at("negatives_from_output").get<bool>();
  return c;
}

GanBundle GanBundle::create(const models::GeneratorSpec& gspec,
                            const models::DiscriminatorSpec& dspec,
                            std::shared_ptr<models::EncoderBackbone> backbone,
                            const dsp::StftConfig& stft_config,
                            const dsp::Compression& compression, const GanTrainConfig& config) {
  NS_CHECK(backbone != nullptr, ConfigError, "GanBundle: backbone required");
  GanBundle b;
  b.gspec = gspec;
  b.dspec = dspec;
  b.embed_dim = backbone->embed_dim();
  b.stft_config = stft_config;
  b.compression = compression;
  b.config = config;
  b.generator = models::Generator(gspec, b.embed_dim, config.seed);
  b.discriminator = models::Discriminator(dspec, config.seed);
  b.backbone = std::move(backbone);
  b.projection = losses::PclProjection(b.generator.tap_channels(), config.pcl, config.seed);
  AdamConfig ag{config.lr, config.beta1, config.beta2, 1e-8};
  b.opt_g = Adam(ag);
  b.opt_d = Adam(ag);
  return b;
}

ParamMap GanBundle::generator_params() const {
  ParamMap pm;
  generator.collect(pm, "g.");
  projection.collect(pm, "proj.");
  return pm;
}

ParamMap GanBundle::discriminator_params() const {
  ParamMap pm;
  discriminator.collect(pm, "d.");
  return pm;
}

ParamMap GanBundle::backbone_params() const {
  ParamMap pm;
  backbone->collect(pm, "b.");
  return pm;
}

void save_bundle(const GanBundle& bundle, const std::string& path) {
  Archive ar;
  ar.header["kind"] = "bundle";
  ar.header["gspec"] = {{"base_channels", bundle.gspec.base_channels},
                        {"res_blocks", bundle.gspec.res_blocks},
                        {"dropout", bundle.gspec.dropout}};
  ar.header["dspec"] = {{"base_channels", bundle.dspec.base_channels}};
  ar.header["embed_dim"] = bundle.embed_dim;
  ar.header["backbone_arch"] = bundle.backbone->arch();
  ar.header["stft"] = {{"n_fft", bundle.stft_config.n_fft},
                       {"hop", bundle.stft_config.hop},
                       {"center_padding", bundle.stft_config.center_padding}};
  ar.header["compression"] = {
      {"kind", bundle.compression.kind == dsp::CompressionKind::kLinear ? "linear" : "log1p"},
      {"lo", bundle.compression.lo},
      {"hi", bundle.compression.hi}};
  ar.header["config"] = bundle.config.to_json();
  ar.header["step"] = bundle.step;
  ar.header["epoch"] = bundle.epoch;
  // stream state: every stochastic draw is derived from (seed, step/epoch)
  ar.header["rng_state"] = {{"seed", bundle.config.seed}, {"step", bundle.step}};

  store_params(ar, bundle.generator_params());
  store_params(ar, bundle.discriminator_params());
  store_params(ar, bundle.backbone_params());
  bundle.opt_g.store(ar, "opt_g.");
  bundle.opt_d.store(ar, "opt_d.");
  save_archive(path, ar);
}

GanBundle load_bundle(const std::string& path) {
  Archive ar = load_archive(path);
  NS_CHECK(ar.header.value("kind", "") == "bundle", IoError,
           "load_bundle: " << path << " is not a bundle checkpoint");

  models::GeneratorSpec gspec;
  gspec.base_channels = ar.header.at("gspec").at("base_channels").get<int>();
  gspec.res_blocks = ar.header.at("gspec").at("res_blocks").get<int>();
  gspec.dropout = ar.header.at("gspec").at("dropout").get<double>();
  models::DiscriminatorSpec dspec;
  dspec.base_channels = ar.header.at("dspec").at("base_channels").get<int>();

  const int embed_dim = ar.header.at("embed_dim").get<int>();
  const std::string arch = ar.header.value("backbone_arch", "");
  NS_CHECK(arch == "conv4", IoError,
           "load_bundle: unsupported backbone arch '" << arch << "' in " << path);

  dsp::StftConfig stft_cfg;
  stft_cfg.n_fft = ar.header.at("stft").at("n_fft").get<int>();
  stft_cfg.hop = ar.header.at("stft").at("hop").get<int>();
  stft_cfg.center_padding = ar.header.at("stft").at("center_padding").get<bool>();

  dsp::Compression comp;
  comp.kind = ar.header.at("compression").at("kind").get<std::string>() == "linear"
                  ? dsp::CompressionKind::kLinear
                  : dsp::CompressionKind::kLog1pMinMax;
  comp.lo = ar.header.at("compression").at("lo").get<double>();
  comp.hi = ar.header.at("compression").at("hi").get<double>();

  GanBundle b = GanBundle::create(gspec, dspec,
                                  std::make_shared<models::ConvEncoderBackbone>(embed_dim, 0),
                                  stft_cfg, comp,
                                  GanTrainConfig::from_json(ar.header.at("config")));
  b.step = ar.header.at("step").get<int64_t>();
  b.epoch = ar.header.at("epoch").get<int64_t>();

  ParamMap gp = b.generator_params();
  load_params(ar, gp);
  ParamMap dp = b.discriminator_params();
  load_params(ar, dp);
  ParamMap bp = b.backbone_params();
  load_params(ar, bp);
  b.opt_g.load(ar, "opt_g.");
  b.opt_d.load(ar, "opt_d.");
  return b;
}

}  // namespace noisesim::train
