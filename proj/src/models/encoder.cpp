// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/models/encoder.hpp"

#include "noisesim/core/serialize.hpp"

namespace noisesim::models {

Tensor encoder_embed(const EncoderBackbone& backbone, const Tensor& segment) {
  Tensor seq = backbone.penultimate(segment);  // [D, T']
  return mean_axis(seq, 1);
}

ClassifierHead ClassifierHead::create(int embed_dim, int classes, uint64_t seed) {
  NS_CHECK(classes >= 2, ConfigError, "ClassifierHead: need at least two classes");
  ClassifierHead h;
  Rng rng = rng_stream(seed, "classifier_head_init");
  h.fc = LinearLayer::create(embed_dim, classes, rng, 0.05);
  h.classes = classes;
  return h;
}

Tensor encoder_classify(const EncoderBackbone& backbone, const ClassifierHead* head,
                        const Tensor& segment) {
  NS_CHECK(head != nullptr && head->classes > 0, ConfigError,
           "encoder_classify: no classification head attached");
  Tensor emb = encoder_embed(backbone, segment);
  return head->fc.forward(emb);
}

ConvEncoderBackbone::ConvEncoderBackbone(int embed_dim, uint64_t init_seed)
    : embed_dim_(embed_dim) {
  NS_CHECK(embed_dim >= 8 && embed_dim % 8 == 0, ConfigError,
           "ConvEncoderBackbone: embed_dim must be a positive multiple of 8");
  Rng rng = rng_stream(init_seed, "encoder_init");
  // channel 2 of the input is the frequency-coordinate ramp
  const int channels[5] = {2, embed_dim / 8, embed_dim / 4, embed_dim / 2, embed_dim};
  for (int i = 0; i < 4; ++i)
    blocks_.push_back(Conv2dLayer::create(channels[i], channels[i + 1], 3, 2, 1, rng));
}

Tensor ConvEncoderBackbone::penultimate(const Tensor& segment) const {
  NS_CHECK(segment.rank() == 3 && segment.dim(0) == 1, ShapeError,
           "ConvEncoderBackbone: input must be [1,F,T], got " << shape_str(segment.shape()));
  Tensor h = append_freq_coord(segment);
  for (size_t i = 0; i + 1 < blocks_.size(); ++i) h = relu(instance_norm(blocks_[i].forward(h)));
  // no normalization before pooling: the pooled features keep magnitudes
  h = relu(blocks_.back().forward(h));
  // [D, F', T'] -> [D, T']
  return mean_axis(h, 1);
}

void ConvEncoderBackbone::collect(ParamMap& pm, const std::string& prefix) const {
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].collect(pm, prefix + "block" + std::to_string(i));
}

void save_backbone(const EncoderBackbone& backbone, const std::string& path,
                   const dsp::Compression& compression) {
  Archive ar;
  ar.header["kind"] = "backbone";
  ar.header["arch"] = backbone.arch();
  ar.header["embed_dim"] = backbone.embed_dim();
  ar.header["compression"] = {
      {"kind", compression.kind == dsp::CompressionKind::kLinear ? "linear" : "log1p"},
      {"lo", compression.lo},
      {"hi", compression.hi}};
  ParamMap pm;
  backbone.collect(pm, "");
  store_params(ar, pm);
  save_archive(path, ar);
}

BackboneCheckpoint load_backbone(const std::string& path) {
  Archive ar = load_archive(path);
  NS_CHECK(ar.header.value("kind", "") == "backbone", IoError,
           "load_backbone: " << path << " is not a backbone checkpoint");
  const std::string arch = ar.header.value("arch", "");
  const int embed_dim = ar.header.value("embed_dim", 0);

  BackboneCheckpoint out;
  if (ar.header.contains("compression")) {
    const auto& c = ar.header.at("compression");
    out.compression.kind = c.at("kind").get<std::string>() == "linear"
                               ? dsp::CompressionKind::kLinear
                               : dsp::CompressionKind::kLog1pMinMax;
    out.compression.lo = c.at("lo").get<double>();
    out.compression.hi = c.at("hi").get<double>();
  }
  if (arch == "conv4") {
    auto backbone = std::make_shared<ConvEncoderBackbone>(embed_dim, /*init_seed=*/0);
    ParamMap pm;
    backbone->collect(pm, "");
    load_params(ar, pm);
    out.backbone = std::move(backbone);
    return out;
  }
  throw ConfigError("load_backbone: unsupported backbone arch '" + arch +
                    "'; register an adapter for externally pre-trained encoders");
}

}  // namespace noisesim::models
