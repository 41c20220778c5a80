// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end: corpus manifests, encoder fine-tuning,
// adversarial training, dataset simulation, enhancement-model adaptation,
// evaluation, and analysis plots.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "noisesim/adapt_eval/analysis.hpp"
#include "noisesim/adapt_eval/evaluate.hpp"
#include "noisesim/data/sampling.hpp"
#include "noisesim/dsp/wav.hpp"
#include "noisesim/simulate/simulate.hpp"
#include "noisesim/train/encoder_finetune.hpp"
#include "noisesim/train/gan.hpp"

namespace fs = std::filesystem;
using namespace noisesim;

namespace {

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  NS_CHECK(!out.empty(), InvalidInput, "expected a comma-separated list, got '" << csv << "'");
  return out;
}

std::unique_ptr<eval::SeBackend> open_backend(const std::string& backend,
                                              const std::string& model,
                                              const std::string& exe) {
  if (backend == "desk") {
    NS_CHECK(!model.empty(), ConfigError, "desk backend needs --model");
    return eval::DeskSeBackend::load(model);
  }
  if (backend == "external") {
    NS_CHECK(!exe.empty(), ConfigError, "external backend needs --exe");
    return std::make_unique<eval::ExecSeBackend>(exe);
  }
  throw ConfigError("unknown backend '" + backend + "' (expected desk or external)");
}

struct GanFlags {
  std::string clean_manifest, noisy_manifest, backbone_path, out_path, resume_path;
  std::string log_path, checkpoint_dir, adv_form = "nonsaturating";
  train::GanTrainConfig cfg;
  int base_channels = 64;
  int res_blocks = 9;
  int d_channels = 64;
  int embed_dim = 128;
  bool no_embeddings = false;
};

void add_gan_flags(CLI::App* cmd, GanFlags& f) {
  cmd->add_option("--clean", f.clean_manifest, "source-clean manifest")->required();
  cmd->add_option("--noisy", f.noisy_manifest, "target-noisy manifest")->required();
  cmd->add_option("--backbone", f.backbone_path, "fine-tuned noise-encoder checkpoint");
  cmd->add_option("--epochs", f.cfg.epochs, "training epochs");
  cmd->add_option("--lr", f.cfg.lr, "Adam learning rate");
  cmd->add_option("--batch-size", f.cfg.batch_size, "segments per step");
  cmd->add_option("--lambda-nse", f.cfg.lambda_nse, "noise-reconstruction weight");
  cmd->add_option("--seed", f.cfg.seed, "training seed");
  cmd->add_option("--adv-form", f.adv_form, "saturating|nonsaturating generator term");
  cmd->add_option("--base-channels", f.base_channels, "generator width");
  cmd->add_option("--res-blocks", f.res_blocks, "generator residual blocks");
  cmd->add_option("--d-channels", f.d_channels, "discriminator width");
  cmd->add_option("--embed-dim", f.embed_dim, "embedding dim when no backbone file is given");
  cmd->add_option("--pcl-patches", f.cfg.pcl.patches_per_layer, "contrastive patches per layer");
  cmd->add_option("--pcl-negatives", f.cfg.pcl.negatives, "contrastive negatives");
  cmd->add_option("--pcl-tau", f.cfg.pcl.temperature, "contrastive temperature");
  cmd->add_flag("--pcl-negatives-from-output", f.cfg.pcl.negatives_from_output,
                "draw negative patches from the generated representation");
  cmd->add_flag("--no-embeddings", f.no_embeddings,
                "condition on a fixed zero embedding (ablation)");
  cmd->add_option("--checkpoint-every", f.cfg.checkpoint_every, "epochs between checkpoints");
  cmd->add_option("--checkpoint-dir", f.checkpoint_dir, "periodic checkpoint directory");
  cmd->add_option("--log", f.log_path, "per-step loss log (JSONL)");
  cmd->add_option("--resume", f.resume_path, "resume from an existing bundle");
  cmd->add_option("--out", f.out_path, "output bundle path")->required();
}

train::GanBundle build_or_resume(const GanFlags& f) {
  if (!f.resume_path.empty()) {
    train::GanBundle bundle = train::load_bundle(f.resume_path);
    bundle.config.epochs = f.cfg.epochs;  // allow extending a finished run
    return bundle;
  }
  data::Manifest clean = data::load_manifest(f.clean_manifest);
  data::Manifest noisy = data::load_manifest(f.noisy_manifest);

  std::shared_ptr<models::EncoderBackbone> backbone;
  dsp::Compression comp;
  if (!f.backbone_path.empty()) {
    models::BackboneCheckpoint ckpt = models::load_backbone(f.backbone_path);
    backbone = ckpt.backbone;
    comp = ckpt.compression;
    if (comp.kind == dsp::CompressionKind::kLinear) {
      NS_WARN << "backbone checkpoint has no compression constants; fitting over the pools";
      comp = data::fit_compression({&clean, &noisy});
    }
  } else {
    NS_WARN << "no --backbone given: using a randomly initialized noise encoder";
    backbone = std::make_shared<models::ConvEncoderBackbone>(f.embed_dim, f.cfg.seed);
    comp = data::fit_compression({&clean, &noisy});
  }

  train::GanTrainConfig cfg = f.cfg;
  cfg.adv_form = losses::adv_form_from_string(f.adv_form);
  cfg.condition_embeddings = !f.no_embeddings;
  return train::GanBundle::create(models::GeneratorSpec{f.base_channels, f.res_blocks, 0.5},
                                  models::DiscriminatorSpec{f.d_channels}, backbone, {}, comp,
                                  cfg);
}

int run_gan_training(const GanFlags& f) {
  data::Manifest clean = data::load_manifest(f.clean_manifest);
  data::Manifest noisy = data::load_manifest(f.noisy_manifest);
  train::GanBundle bundle = build_or_resume(f);

  data::SegmentPool clean_pool = data::build_pool(clean, bundle.stft_config, bundle.compression);
  data::SegmentPool noisy_pool = data::build_pool(noisy, bundle.stft_config, bundle.compression);

  train::GanTrainHooks hooks;
  hooks.log_path = f.log_path;
  hooks.checkpoint_dir = f.checkpoint_dir;
  int64_t last_epoch = -1;
  hooks.on_epoch_end = [&](int64_t epoch) {
    if (epoch != last_epoch && epoch % 10 == 0) NS_LOG << "epoch " << epoch << " done";
    last_epoch = epoch;
  };
  train::train_gan(bundle, clean_pool, noisy_pool, hooks);
  train::save_bundle(bundle, f.out_path);
  NS_LOG << "trained " << bundle.step << " steps; bundle written to " << f.out_path;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-aware simulation toolkit for speech-enhancement adaptation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");

  // ---- data ----
  auto* data_cmd = app.add_subcommand("data", "corpus manifests and sampling");
  data_cmd->require_subcommand(1);

  struct {
    std::string root, domain = "source_clean", out, clean_ref_dir;
    bool no_validate = false, no_noise_type = false;
  } bm;
  auto* build_cmd = data_cmd->add_subcommand("build-manifest", "scan a corpus directory");
  build_cmd->add_option("--root", bm.root)->required();
  build_cmd->add_option("--domain", bm.domain, "source_clean|target_noisy");
  build_cmd->add_option("--out", bm.out)->required();
  build_cmd->add_option("--clean-ref-dir", bm.clean_ref_dir,
                        "directory holding same-named clean references");
  build_cmd->add_flag("--no-validate", bm.no_validate, "skip audio decode validation");
  build_cmd->add_flag("--no-infer-noise-type", bm.no_noise_type);
  build_cmd->callback([&] {
    data::DomainRules rules;
    rules.domain = data::domain_from_string(bm.domain);
    rules.infer_noise_type = !bm.no_noise_type;
    rules.validate_audio = !bm.no_validate;
    if (!bm.clean_ref_dir.empty()) rules.clean_ref_dir = bm.clean_ref_dir;
    data::Manifest m = data::build_manifest(bm.root, rules);
    data::save_manifest(m, bm.out);
    NS_LOG << "wrote " << m.size() << " entries to " << bm.out;
  });

  struct {
    std::string source, target, out_source, out_target;
    int n = 40, per_noise_type = 0;
    uint64_t seed = 0;
  } ss;
  auto* sample_cmd = data_cmd->add_subcommand("sample-subset", "draw the unpaired training subset");
  sample_cmd->add_option("--source", ss.source)->required();
  sample_cmd->add_option("--target", ss.target)->required();
  sample_cmd->add_option("--n", ss.n);
  sample_cmd->add_option("--per-noise-type", ss.per_noise_type, "stratified draw per noise type");
  sample_cmd->add_option("--seed", ss.seed);
  sample_cmd->add_option("--out-source", ss.out_source)->required();
  sample_cmd->add_option("--out-target", ss.out_target)->required();
  sample_cmd->callback([&] {
    data::Manifest source = data::load_manifest(ss.source);
    data::Manifest target = data::load_manifest(ss.target);
    std::optional<int> per;
    if (ss.per_noise_type > 0) per = ss.per_noise_type;
    auto [src, tgt] = data::sample_training_subset(source, target, ss.n, per, ss.seed);
    data::save_manifest(src, ss.out_source);
    data::save_manifest(tgt, ss.out_target);
    NS_LOG << "sampled " << src.size() << " clean + " << tgt.size() << " noisy utterances";
  });

  struct {
    std::string test, used, out;
  } ex;
  auto* exclude_cmd = data_cmd->add_subcommand("exclude", "drop training ids from a test set");
  exclude_cmd->add_option("--test", ex.test)->required();
  exclude_cmd->add_option("--used", ex.used)->required();
  exclude_cmd->add_option("--out", ex.out)->required();
  exclude_cmd->callback([&] {
    data::Manifest test = data::load_manifest(ex.test);
    data::Manifest used = data::load_manifest(ex.used);
    data::Manifest reduced = data::exclude_from_test(test, used);
    data::save_manifest(reduced, ex.out);
    NS_LOG << "test set reduced from " << test.size() << " to " << reduced.size();
  });

  // ---- finetune-encoder ----
  struct {
    std::string stage1_corpus, stage2_corpus, backbone_in, backbone_out;
    bool skip_stage1 = false, skip_stage2 = false;
    int epochs1 = 30, epochs2 = 30, embed_dim = 128;
    double lr1 = 1e-4, lr2 = 1e-4;
    uint64_t seed = 0;
  } fe;
  auto* fe_cmd = app.add_subcommand("finetune-encoder", "two-stage noise-encoder fine-tuning");
  fe_cmd->add_option("--stage1-corpus", fe.stage1_corpus, "noise-type labelled manifest");
  fe_cmd->add_option("--stage2-corpus", fe.stage2_corpus, "GAN-training target manifest");
  fe_cmd->add_flag("--skip-stage1", fe.skip_stage1);
  fe_cmd->add_flag("--skip-stage2", fe.skip_stage2);
  fe_cmd->add_option("--epochs1", fe.epochs1);
  fe_cmd->add_option("--epochs2", fe.epochs2);
  fe_cmd->add_option("--lr1", fe.lr1);
  fe_cmd->add_option("--lr2", fe.lr2);
  fe_cmd->add_option("--embed-dim", fe.embed_dim);
  fe_cmd->add_option("--seed", fe.seed);
  fe_cmd->add_option("--backbone-in", fe.backbone_in, "continue from a checkpoint");
  fe_cmd->add_option("--backbone-out", fe.backbone_out)->required();
  fe_cmd->callback([&] {
    data::Manifest stage1, stage2;
    if (!fe.stage1_corpus.empty()) stage1 = data::load_manifest(fe.stage1_corpus);
    if (!fe.stage2_corpus.empty()) stage2 = data::load_manifest(fe.stage2_corpus);

    std::shared_ptr<models::EncoderBackbone> backbone;
    dsp::Compression comp;
    if (!fe.backbone_in.empty()) {
      models::BackboneCheckpoint ckpt = models::load_backbone(fe.backbone_in);
      backbone = ckpt.backbone;
      comp = ckpt.compression;
    } else {
      backbone = std::make_shared<models::ConvEncoderBackbone>(fe.embed_dim, fe.seed);
      std::vector<const data::Manifest*> corpora;
      if (!stage1.empty()) corpora.push_back(&stage1);
      if (!stage2.empty()) corpora.push_back(&stage2);
      comp = data::fit_compression(corpora);
    }

    train::EncoderFinetuneConfig cfg;
    cfg.stage1 = {fe.epochs1, fe.lr1};
    cfg.stage2 = {fe.epochs2, fe.lr2};
    cfg.seed = fe.seed;
    cfg.run_stage1 = !fe.skip_stage1 && !stage1.empty();
    cfg.run_stage2 = !fe.skip_stage2 && !stage2.empty();
    train::finetune_encoder(*backbone, stage1, stage2, cfg, {}, comp);
    models::save_backbone(*backbone, fe.backbone_out, comp);
    NS_LOG << "backbone written to " << fe.backbone_out;
  });

  // ---- train-gan ----
  GanFlags gan;
  auto* gan_cmd = app.add_subcommand("train-gan", "adversarial training of the translator");
  add_gan_flags(gan_cmd, gan);
  gan_cmd->callback([&] { run_gan_training(gan); });

  // ---- simulate ----
  struct {
    std::string bundle, clean_manifest, targets, out, sigma_sweep;
    double sigma = 2.0;
    uint64_t seed = 0;
    bool force = false;
  } sm;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a paired simulated dataset");
  sim_cmd->add_option("--bundle", sm.bundle)->required();
  sim_cmd->add_option("--clean-manifest", sm.clean_manifest)->required();
  sim_cmd->add_option("--targets", sm.targets, "target-noisy manifest (training subset)")
      ->required();
  sim_cmd->add_option("--sigma", sm.sigma, "perturbation standard deviation");
  sim_cmd->add_option("--sigma-sweep", sm.sigma_sweep, "comma-separated sigmas, one run each");
  sim_cmd->add_option("--seed", sm.seed);
  sim_cmd->add_flag("--force", sm.force, "overwrite a mismatched output directory");
  sim_cmd->add_option("--out", sm.out)->required();
  sim_cmd->callback([&] {
    train::GanBundle bundle = train::load_bundle(sm.bundle);
    data::Manifest clean = data::load_manifest(sm.clean_manifest);
    data::Manifest targets = data::load_manifest(sm.targets);
    std::vector<double> sigmas =
        sm.sigma_sweep.empty() ? std::vector<double>{sm.sigma} : parse_double_list(sm.sigma_sweep);
    for (double sigma : sigmas) {
      sim::GenerateConfig cfg;
      cfg.sigma = sigma;
      cfg.seed = sm.seed;
      cfg.force = sm.force;
      const std::string out_dir =
          sigmas.size() == 1 ? sm.out : sm.out + "/sigma_" + std::to_string(sigma);
      auto pairs = sim::generate_dataset(clean, targets, bundle, cfg, out_dir);
      NS_LOG << "sigma " << sigma << ": " << pairs.size() << " pairs under " << out_dir;
    }
  });

  // ---- adapt-se ----
  struct {
    std::string backend = "desk", pairs, model_in, model_out, exe;
    int epochs = 2, se_channels = 16;
    double se_lr = 1e-3;
    uint64_t seed = 0;
  } ad;
  auto* adapt_cmd = app.add_subcommand("adapt-se", "fine-tune an enhancement model on pairs");
  adapt_cmd->add_option("--backend", ad.backend, "desk|external");
  adapt_cmd->add_option("--pairs", ad.pairs, "pairs.jsonl from simulate")->required();
  adapt_cmd->add_option("--epochs", ad.epochs);
  adapt_cmd->add_option("--seed", ad.seed);
  adapt_cmd->add_option("--model-in", ad.model_in, "checkpoint to start from");
  adapt_cmd->add_option("--model-out", ad.model_out)->required();
  adapt_cmd->add_option("--exe", ad.exe, "external enhancement executable");
  adapt_cmd->add_option("--se-channels", ad.se_channels, "desk model width (fresh model)");
  adapt_cmd->add_option("--se-lr", ad.se_lr, "desk model learning rate (fresh model)");
  adapt_cmd->callback([&] {
    auto pairs = sim::load_pairs(ad.pairs);
    std::unique_ptr<eval::SeBackend> backend;
    if (ad.backend == "desk" && ad.model_in.empty()) {
      eval::DeskSeConfig cfg;
      cfg.base_channels = ad.se_channels;
      cfg.lr = ad.se_lr;
      cfg.seed = ad.seed;
      backend = std::make_unique<eval::DeskSeBackend>(cfg);
    } else {
      backend = open_backend(ad.backend, ad.model_in, ad.exe);
    }
    eval::finetune_se(*backend, pairs, ad.epochs, ad.seed);
    backend->save(ad.model_out);
    NS_LOG << "adapted model written to " << ad.model_out;
  });

  // ---- evaluate ----
  struct {
    std::string backend = "desk", model, exe, test, metrics = "si_snr";
    std::string buckets = "2.5,7.5,12.5,17.5", providers, out_table;
  } ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "score an enhancement model on a test set");
  eval_cmd->add_option("--backend", ev.backend, "desk|external");
  eval_cmd->add_option("--model", ev.model, "desk model checkpoint");
  eval_cmd->add_option("--exe", ev.exe, "external enhancement executable");
  eval_cmd->add_option("--test", ev.test, "test manifest with clean_path references")->required();
  eval_cmd->add_option("--metrics", ev.metrics, "comma list of si_snr,pesq,stoi");
  eval_cmd->add_option("--buckets", ev.buckets, "SNR bucket centers");
  eval_cmd->add_option("--providers", ev.providers, "metric-provider registry config (JSON)");
  eval_cmd->add_option("--out-table", ev.out_table, "write the bucket table here");
  eval_cmd->callback([&] {
    auto backend = open_backend(ev.backend, ev.model, ev.exe);
    data::Manifest test = data::load_manifest(ev.test);
    std::set<std::string> metrics;
    std::stringstream msrc(ev.metrics);
    std::string metric;
    while (std::getline(msrc, metric, ',')) metrics.insert(metric);
    eval::MetricProviderRegistry registry;
    if (!ev.providers.empty())
      registry = eval::MetricProviderRegistry::from_config(ev.providers);
    eval::MetricReport report =
        eval::evaluate(*backend, test, metrics, &registry, parse_double_list(ev.buckets));
    std::cout << report.to_table();
    if (!ev.out_table.empty()) {
      std::ofstream f(ev.out_table, std::ios::trunc);
      f << report.to_table();
    }
  });

  // ---- analyze ----
  auto* analyze_cmd = app.add_subcommand("analyze", "histograms and embedding projections");
  analyze_cmd->require_subcommand(1);

  struct {
    std::vector<std::string> manifests;
    double lo = -10.0, hi = 25.0;
    int bins = 35;
    std::string out_table, out_plot;
  } sh;
  auto* hist_cmd = analyze_cmd->add_subcommand("snr-hist", "per-manifest SNR distributions");
  hist_cmd->add_option("--manifest", sh.manifests, "manifest (repeatable)")->required();
  hist_cmd->add_option("--lo", sh.lo);
  hist_cmd->add_option("--hi", sh.hi);
  hist_cmd->add_option("--bins", sh.bins);
  hist_cmd->add_option("--out-table", sh.out_table);
  hist_cmd->add_option("--out-plot", sh.out_plot, "SVG path");
  hist_cmd->callback([&] {
    eval::HistogramSpec spec{sh.lo, sh.hi, sh.bins};
    std::vector<eval::Histogram> hists;
    for (const auto& path : sh.manifests) {
      data::Manifest m = data::load_manifest(path);
      hists.push_back(eval::snr_histogram(m, fs::path(path).stem().string(), spec));
    }
    for (const auto& h : hists) {
      double mean = 0.0;
      for (double s : h.snrs) mean += s;
      NS_LOG << h.name << ": " << h.snrs.size() << " utterances, mean SNR "
             << (h.snrs.empty() ? 0.0 : mean / h.snrs.size()) << " dB";
    }
    if (!sh.out_table.empty()) eval::write_histogram_table(hists, sh.out_table);
    if (!sh.out_plot.empty()) eval::write_histogram_svg(hists, sh.out_plot);
  });

  struct {
    std::string backbone, manifest, out_table, out_plot, projector = "pca";
  } ep;
  auto* proj_cmd = analyze_cmd->add_subcommand("embed-proj",
                                               "2-D projection of noise embeddings");
  proj_cmd->add_option("--backbone", ep.backbone)->required();
  proj_cmd->add_option("--manifest", ep.manifest, "utterances with noise_type labels")
      ->required();
  proj_cmd->add_option("--projector", ep.projector);
  proj_cmd->add_option("--out-table", ep.out_table);
  proj_cmd->add_option("--out-plot", ep.out_plot, "SVG path");
  proj_cmd->callback([&] {
    models::BackboneCheckpoint ckpt = models::load_backbone(ep.backbone);
    data::Manifest m = data::load_manifest(ep.manifest);
    std::map<std::string, int> type_ids;
    std::vector<int> labels;
    std::vector<std::vector<double>> rows;
    NoGradGuard ng;
    for (const auto& e : m.entries) {
      NS_CHECK(e.noise_type.has_value(), ConfigError,
               "embed-proj: utterance " << e.utterance_id << " has no noise_type label");
      dsp::Spectrogram s = dsp::stft(dsp::read_wav(e.audio_path));
      Eigen::MatrixXd mag =
          s.magnitude.unaryExpr([&](double v) { return ckpt.compression.apply(v); });
      auto segs = dsp::segment_matrix(mag, dsp::kSegmentFrames, e.utterance_id);
      Tensor emb =
          models::encoder_embed(*ckpt.backbone, models::segment_to_tensor(segs[0].data));
      rows.push_back(emb.vec());
      labels.push_back(type_ids.emplace(*e.noise_type, static_cast<int>(type_ids.size()))
                           .first->second);
    }
    Eigen::MatrixXd x(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
    eval::ProjectionResult r = eval::embedding_projection(x, labels, ep.projector);
    NS_LOG << "silhouette over " << type_ids.size() << " noise types: " << r.silhouette;
    if (!ep.out_table.empty()) eval::write_projection_table(r, labels, ep.out_table);
    if (!ep.out_plot.empty()) eval::write_projection_svg(r, labels, ep.out_plot);
  });

  // ---- ablate ----
  GanFlags ab;
  std::string ab_config = "full";
  std::string ab_profile_clean;
  auto* ab_cmd = app.add_subcommand("ablate", "train an ablation configuration");
  add_gan_flags(ab_cmd, ab);
  ab_cmd->add_option("--ablation", ab_config, "full|no_nse|no_embeddings")->required();
  ab_cmd->add_option("--profile-clean", ab_profile_clean,
                     "clean manifest for the conditional spectral-distance report");
  ab_cmd->callback([&] {
    eval::AblationConfig which = eval::ablation_from_string(ab_config);
    GanFlags f = ab;
    f.cfg = eval::apply_ablation(f.cfg, which);
    f.no_embeddings = !f.cfg.condition_embeddings;
    run_gan_training(f);
    if (!ab_profile_clean.empty()) {
      train::GanBundle bundle = train::load_bundle(f.out_path);
      data::Manifest clean = data::load_manifest(ab_profile_clean);
      data::Manifest targets = data::load_manifest(f.noisy_manifest);
      const double d = eval::conditional_profile_distance(clean, targets, bundle);
      std::cout << "ablation\t" << ab_config << "\tconditional_profile_distance\t" << d << "\n";
    }
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
