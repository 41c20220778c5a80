// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "noisesim/adapt_eval/analysis.hpp"
#include "noisesim/adapt_eval/evaluate.hpp"
#include "noisesim/data/sampling.hpp"
#include "noisesim/dsp/wav.hpp"
#include "noisesim/simulate/simulate.hpp"
#include "noisesim/train/encoder_finetune.hpp"
#include "noisesim/train/gan.hpp"

namespace py = pybind11;
using namespace noisesim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

dsp::Waveform to_waveform(const Array& samples, int sample_rate) {
  NS_CHECK(samples.ndim() == 1, ShapeError, "expected a 1-D sample array");
  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  return w;
}

Array from_vector(const std::vector<double>& v) {
  return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

Eigen::MatrixXd to_matrix(const Array& a) {
  NS_CHECK(a.ndim() == 2, ShapeError, "expected a 2-D array");
  Eigen::MatrixXd m(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = a.at(i, j);
  return m;
}

Array from_matrix(const Eigen::MatrixXd& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  for (py::ssize_t i = 0; i < m.rows(); ++i)
    for (py::ssize_t j = 0; j < m.cols(); ++j) out.mutable_at(i, j) = m(i, j);
  return out;
}

Tensor segment_tensor_from_array(const Array& a) {
  return models::segment_to_tensor(to_matrix(a));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "noise-aware data simulation toolkit (native core)";

  py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericsError>(m, "NumericsError", PyExc_ArithmeticError);

  // ---- dsp ----
  m.def(
      "stft",
      [](const Array& samples, int sample_rate, int n_fft, int hop) {
        dsp::StftConfig cfg;
        cfg.n_fft = n_fft;
        cfg.hop = hop;
        dsp::Spectrogram s = dsp::stft(to_waveform(samples, sample_rate), cfg);
        return py::make_tuple(from_matrix(s.magnitude), from_matrix(*s.phase));
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("n_fft") = 256,
      py::arg("hop") = 128, "magnitude and phase, each bins x frames");

  m.def(
      "istft",
      [](const Array& magnitude, const Array& phase, int sample_rate, int n_fft, int hop) {
        dsp::Spectrogram s;
        s.config.n_fft = n_fft;
        s.config.hop = hop;
        s.magnitude = to_matrix(magnitude);
        s.phase = to_matrix(phase);
        return from_vector(dsp::istft(s, sample_rate).samples);
      },
      py::arg("magnitude"), py::arg("phase"), py::arg("sample_rate") = 16000,
      py::arg("n_fft") = 256, py::arg("hop") = 128);

  m.def(
      "segment",
      [](const Array& magnitude, int width) {
        py::list out;
        for (const auto& seg : dsp::segment_matrix(to_matrix(magnitude), width)) {
          py::dict d;
          d["data"] = from_matrix(seg.data);
          d["frame_offset"] = seg.frame_offset;
          d["padded_tail"] = seg.padded_tail;
          d["valid_frames"] = seg.valid_frames;
          out.append(d);
        }
        return out;
      },
      py::arg("magnitude"), py::arg("width") = dsp::kSegmentFrames);

  m.def(
      "estimate_snr",
      [](const Array& noisy, const Array& clean) {
        return dsp::estimate_snr(to_waveform(noisy, 16000), to_waveform(clean, 16000));
      },
      py::arg("noisy"), py::arg("clean"));

  m.def(
      "estimate_snr_unpaired",
      [](const Array& noisy) { return dsp::estimate_snr_unpaired(to_waveform(noisy, 16000)); },
      py::arg("noisy"));

  m.def(
      "si_snr",
      [](const Array& est, const Array& ref) {
        return eval::si_snr_db(to_waveform(est, 16000), to_waveform(ref, 16000));
      },
      py::arg("est"), py::arg("ref"));

  m.def(
      "read_wav",
      [](const std::string& path) {
        dsp::Waveform w = dsp::read_wav(path);
        return py::make_tuple(from_vector(w.samples), w.sample_rate);
      },
      py::arg("path"));

  m.def(
      "write_wav",
      [](const std::string& path, const Array& samples, int sample_rate, bool float32) {
        dsp::write_wav(path, to_waveform(samples, sample_rate),
                       float32 ? dsp::WavEncoding::kFloat32 : dsp::WavEncoding::kPcm16);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 16000,
      py::arg("float32") = false);

  // ---- model ops ----
  m.def(
      "film_apply",
      [](const Array& features, const Array& w, const Array& b) {
        NS_CHECK(features.ndim() == 3, ShapeError, "film_apply: features must be [C,H,W]");
        const int c = static_cast<int>(features.shape(0));
        const int h = static_cast<int>(features.shape(1));
        const int wd = static_cast<int>(features.shape(2));
        Tensor x = Tensor::from_vector(
            {c, h, wd}, std::vector<double>(features.data(), features.data() + features.size()));
        Tensor wt = Tensor::from_vector({c}, std::vector<double>(w.data(), w.data() + w.size()));
        Tensor bt = Tensor::from_vector({c}, std::vector<double>(b.data(), b.data() + b.size()));
        Tensor y = film(x, wt, bt);
        Array out({static_cast<py::ssize_t>(c), static_cast<py::ssize_t>(h),
                   static_cast<py::ssize_t>(wd)});
        std::copy(y.data(), y.data() + y.size(), out.mutable_data());
        return out;
      },
      py::arg("features"), py::arg("weight"), py::arg("bias"),
      "per-channel affine conditioning of a [C,H,W] feature map");

  m.def(
      "perturb_embedding",
      [](const Array& embedding, double sigma, uint64_t seed) {
        Tensor n = Tensor::from_vector(
            {static_cast<int>(embedding.size())},
            std::vector<double>(embedding.data(), embedding.data() + embedding.size()));
        sim::PerturbationConfig cfg{sigma, seed};
        return from_vector(sim::perturb_embedding(n, cfg).vec());
      },
      py::arg("embedding"), py::arg("sigma"), py::arg("seed") = 0);

  m.def(
      "encoder_embed",
      [](const std::string& backbone_path, const Array& segment) {
        models::BackboneCheckpoint ckpt = models::load_backbone(backbone_path);
        NoGradGuard ng;
        return from_vector(
            models::encoder_embed(*ckpt.backbone, segment_tensor_from_array(segment)).vec());
      },
      py::arg("backbone_path"), py::arg("segment"),
      "noise embedding of a compressed-magnitude segment");

  m.def(
      "generator_forward",
      [](const std::string& bundle_path, const Array& segment,
         std::optional<Array> embedding) {
        train::GanBundle bundle = train::load_bundle(bundle_path);
        NoGradGuard ng;
        Tensor n;
        if (embedding) {
          n = Tensor::from_vector(
              {static_cast<int>(embedding->size())},
              std::vector<double>(embedding->data(), embedding->data() + embedding->size()));
        } else {
          n = Tensor::zeros({bundle.embed_dim});
        }
        Tensor y = bundle.generator.forward(segment_tensor_from_array(segment), n, false, nullptr);
        return from_matrix(models::tensor_to_matrix(y));
      },
      py::arg("bundle_path"), py::arg("segment"), py::arg("embedding") = std::nullopt,
      "translate one compressed-magnitude segment");

  m.def(
      "silhouette",
      [](const Array& embeddings, const std::vector<int>& labels) {
        return eval::silhouette_score(to_matrix(embeddings), labels);
      },
      py::arg("embeddings"), py::arg("labels"));

  // ---- pipeline ops (path based) ----
  m.def(
      "build_manifest",
      [](const std::string& root, const std::string& domain, const std::string& out,
         std::optional<std::string> clean_ref_dir, bool validate) {
        data::DomainRules rules;
        rules.domain = data::domain_from_string(domain);
        rules.clean_ref_dir = std::move(clean_ref_dir);
        rules.validate_audio = validate;
        data::Manifest m = data::build_manifest(root, rules);
        data::save_manifest(m, out);
        return m.size();
      },
      py::arg("root"), py::arg("domain"), py::arg("out"),
      py::arg("clean_ref_dir") = std::nullopt, py::arg("validate") = true);

  m.def(
      "sample_training_subset",
      [](const std::string& source, const std::string& target, int n,
         std::optional<int> per_noise_type, uint64_t seed, const std::string& out_source,
         const std::string& out_target) {
        auto [src, tgt] = data::sample_training_subset(
            data::load_manifest(source), data::load_manifest(target), n, per_noise_type, seed);
        data::save_manifest(src, out_source);
        data::save_manifest(tgt, out_target);
        return py::make_tuple(src.size(), tgt.size());
      },
      py::arg("source"), py::arg("target"), py::arg("n") = 40,
      py::arg("per_noise_type") = std::nullopt, py::arg("seed") = 0, py::arg("out_source"),
      py::arg("out_target"));

  m.def(
      "exclude_from_test",
      [](const std::string& test, const std::string& used, const std::string& out) {
        data::Manifest reduced =
            data::exclude_from_test(data::load_manifest(test), data::load_manifest(used));
        data::save_manifest(reduced, out);
        return reduced.size();
      },
      py::arg("test"), py::arg("used"), py::arg("out"));

  m.def(
      "finetune_encoder",
      [](const std::string& stage1_manifest, const std::string& stage2_manifest,
         const std::string& backbone_out, int embed_dim, int epochs1, double lr1, int epochs2,
         double lr2, uint64_t seed) {
        data::Manifest s1 = data::load_manifest(stage1_manifest);
        data::Manifest s2 = data::load_manifest(stage2_manifest);
        dsp::Compression comp = data::fit_compression({&s1, &s2});
        models::ConvEncoderBackbone backbone(embed_dim, seed);
        train::EncoderFinetuneConfig cfg;
        cfg.stage1 = {epochs1, lr1};
        cfg.stage2 = {epochs2, lr2};
        cfg.seed = seed;
        train::FinetuneResult r = train::finetune_encoder(backbone, s1, s2, cfg, {}, comp);
        models::save_backbone(backbone, backbone_out, comp);
        py::dict d;
        d["stage1_accuracy"] = r.stage1_accuracy;
        d["stage2_accuracy"] = r.stage2_accuracy;
        return d;
      },
      py::arg("stage1_manifest"), py::arg("stage2_manifest"), py::arg("backbone_out"),
      py::arg("embed_dim") = 128, py::arg("epochs1") = 30, py::arg("lr1") = 1e-4,
      py::arg("epochs2") = 30, py::arg("lr2") = 1e-4, py::arg("seed") = 0);

  m.def(
      "train_gan",
      [](const std::string& clean_manifest, const std::string& noisy_manifest,
         const std::string& backbone_path, const std::string& out, int epochs, double lr,
         double lambda_nse, uint64_t seed, int base_channels, int res_blocks, int d_channels,
         int pcl_patches, int pcl_negatives, const std::string& adv_form,
         bool condition_embeddings, const std::string& log_path) {
        data::Manifest clean = data::load_manifest(clean_manifest);
        data::Manifest noisy = data::load_manifest(noisy_manifest);

        std::shared_ptr<models::EncoderBackbone> backbone;
        dsp::Compression comp;
        if (!backbone_path.empty()) {
          models::BackboneCheckpoint ckpt = models::load_backbone(backbone_path);
          backbone = ckpt.backbone;
          comp = ckpt.compression;
        } else {
          backbone = std::make_shared<models::ConvEncoderBackbone>(128, seed);
          comp = data::fit_compression({&clean, &noisy});
        }
        train::GanTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.lambda_nse = lambda_nse;
        cfg.seed = seed;
        cfg.adv_form = losses::adv_form_from_string(adv_form);
        cfg.condition_embeddings = condition_embeddings;
        cfg.pcl.patches_per_layer = pcl_patches;
        cfg.pcl.negatives = pcl_negatives;
        train::GanBundle bundle = train::GanBundle::create(
            models::GeneratorSpec{base_channels, res_blocks, 0.5},
            models::DiscriminatorSpec{d_channels}, backbone, {}, comp, cfg);
        data::SegmentPool cpool = data::build_pool(clean, bundle.stft_config, comp);
        data::SegmentPool npool = data::build_pool(noisy, bundle.stft_config, comp);
        train::GanTrainHooks hooks;
        hooks.log_path = log_path;
        train::train_gan(bundle, cpool, npool, hooks);
        train::save_bundle(bundle, out);
        return bundle.step;
      },
      py::arg("clean_manifest"), py::arg("noisy_manifest"), py::arg("backbone_path") = "",
      py::arg("out"), py::arg("epochs") = 400, py::arg("lr") = 2e-4,
      py::arg("lambda_nse") = 10.0, py::arg("seed") = 0, py::arg("base_channels") = 64,
      py::arg("res_blocks") = 9, py::arg("d_channels") = 64, py::arg("pcl_patches") = 256,
      py::arg("pcl_negatives") = 256, py::arg("adv_form") = "nonsaturating",
      py::arg("condition_embeddings") = true, py::arg("log_path") = "");

  m.def(
      "simulate_dataset",
      [](const std::string& bundle_path, const std::string& clean_manifest,
         const std::string& targets, const std::string& out_dir, double sigma, uint64_t seed,
         bool force) {
        train::GanBundle bundle = train::load_bundle(bundle_path);
        sim::GenerateConfig cfg{sigma, seed, force};
        auto pairs = sim::generate_dataset(data::load_manifest(clean_manifest),
                                           data::load_manifest(targets), bundle, cfg, out_dir);
        return pairs.size();
      },
      py::arg("bundle_path"), py::arg("clean_manifest"), py::arg("targets"), py::arg("out_dir"),
      py::arg("sigma") = 2.0, py::arg("seed") = 0, py::arg("force") = false);

  m.def(
      "adapt_se",
      [](const std::string& pairs_path, const std::string& model_out, int epochs,
         int base_channels, double lr, uint64_t seed, const std::string& model_in) {
        auto pairs = sim::load_pairs(pairs_path);
        std::unique_ptr<eval::SeBackend> backend;
        if (model_in.empty()) {
          eval::DeskSeConfig cfg;
          cfg.base_channels = base_channels;
          cfg.lr = lr;
          cfg.seed = seed;
          backend = std::make_unique<eval::DeskSeBackend>(cfg);
        } else {
          backend = eval::DeskSeBackend::load(model_in);
        }
        eval::finetune_se(*backend, pairs, epochs, seed);
        backend->save(model_out);
      },
      py::arg("pairs_path"), py::arg("model_out"), py::arg("epochs") = 2,
      py::arg("base_channels") = 16, py::arg("lr") = 1e-3, py::arg("seed") = 0,
      py::arg("model_in") = "");

  m.def(
      "evaluate",
      [](const std::string& model_path, const std::string& test_manifest,
         const std::vector<std::string>& metrics, const std::string& providers_config) {
        auto backend = eval::DeskSeBackend::load(model_path);
        eval::MetricProviderRegistry registry;
        if (!providers_config.empty())
          registry = eval::MetricProviderRegistry::from_config(providers_config);
        std::set<std::string> mset(metrics.begin(), metrics.end());
        eval::MetricReport report =
            eval::evaluate(*backend, data::load_manifest(test_manifest), mset, &registry);
        py::dict d;
        d["mean_si_snr"] = report.mean_si_snr;
        d["evaluated"] = report.evaluated;
        d["skipped"] = report.skipped;
        py::list buckets;
        for (const auto& b : report.buckets) {
          py::dict bd;
          bd["bucket"] = b.bucket;
          bd["count"] = b.count;
          bd["si_snr"] = b.si_snr;
          if (b.pesq) bd["pesq"] = *b.pesq;
          if (b.stoi) bd["stoi"] = *b.stoi;
          buckets.append(bd);
        }
        d["buckets"] = buckets;
        return d;
      },
      py::arg("model_path"), py::arg("test_manifest"),
      py::arg("metrics") = std::vector<std::string>{"si_snr"},
      py::arg("providers_config") = "");
}
