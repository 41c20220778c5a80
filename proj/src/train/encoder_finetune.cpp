// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/train/encoder_finetune.hpp"

#include <algorithm>
#include <map>

#include "noisesim/dsp/wav.hpp"
#include "noisesim/train/adam.hpp"

namespace noisesim::train {

namespace {

struct LabelledSegment {
  Tensor segment;  // [1,F,T] compressed magnitude
  int label = 0;
};

std::vector<LabelledSegment> load_segments(const data::Manifest& corpus,
                                           const dsp::StftConfig& stft_cfg,
                                           const dsp::Compression& compression,
                                           bool label_by_utterance, int* num_classes) {
  std::map<std::string, int> type_index;
  if (!label_by_utterance) {
    for (const auto& e : corpus.entries) {
      NS_CHECK(e.noise_type.has_value(), ConfigError,
               "finetune_encoder: stage 1 needs noise_type labels; utterance " << e.utterance_id
                                                                               << " has none");
      type_index.emplace(*e.noise_type, 0);
    }
    int next = 0;
    for (auto& [type, idx] : type_index) idx = next++;
  }

  std::vector<LabelledSegment> out;
  int utt_index = 0;
  for (const auto& e : corpus.entries) {
    dsp::Spectrogram s = dsp::stft(dsp::read_wav(e.audio_path), stft_cfg);
    Eigen::MatrixXd mag = s.magnitude.unaryExpr([&](double m) { return compression.apply(m); });
    const int label = label_by_utterance ? utt_index : type_index.at(*e.noise_type);
    auto segs = dsp::segment_matrix(mag, dsp::kSegmentFrames, e.utterance_id);
    for (const auto& seg : segs) {
      // flagged tail padding stays out of the loss unless it is all we have
      if (seg.padded_tail && segs.size() > 1) continue;
      out.push_back({models::segment_to_tensor(seg.data), label});
    }
    ++utt_index;
  }
  *num_classes = label_by_utterance ? utt_index : static_cast<int>(type_index.size());
  NS_CHECK(*num_classes >= 2, ConfigError, "finetune_encoder: need at least two classes");
  return out;
}

double run_stage(models::EncoderBackbone& backbone, const std::vector<LabelledSegment>& segments,
                 int num_classes, const EncoderStageConfig& stage, uint64_t seed,
                 const char* tag) {
  models::ClassifierHead head = models::ClassifierHead::create(backbone.embed_dim(), num_classes,
                                                               seed);
  ParamMap params;
  backbone.collect(params, "b.");
  head.fc.collect(params, "head");
  params.set_requires_grad(true);
  Adam opt(AdamConfig{stage.lr, 0.9, 0.999, 1e-8});

  for (int epoch = 0; epoch < stage.epochs; ++epoch) {
    Rng shuffle = rng_stream(seed, tag, static_cast<uint64_t>(epoch));
    std::vector<int> order = shuffle.permutation(static_cast<int>(segments.size()));
    for (int idx : order) {
      Tensor logits = models::encoder_classify(backbone, &head, segments[idx].segment);
      Tensor loss = cross_entropy_logits(logits, segments[idx].label);
      params.zero_grad();
      loss.backward();
      opt.step(params);
    }
  }

  int correct = 0;
  {
    NoGradGuard ng;
    for (const auto& seg : segments) {
      Tensor logits = models::encoder_classify(backbone, &head, seg.segment);
      int arg = 0;
      for (int k = 1; k < num_classes; ++k)
        if (logits.data()[k] > logits.data()[arg]) arg = k;
      if (arg == seg.label) ++correct;
    }
  }
  // the head goes out of scope here; the backbone keeps the tuned features
  return static_cast<double>(correct) / static_cast<double>(segments.size());
}

}  // namespace

FinetuneResult finetune_encoder(models::EncoderBackbone& backbone,
                                const data::Manifest& stage1_corpus,
                                const data::Manifest& stage2_corpus,
                                const EncoderFinetuneConfig& cfg,
                                const dsp::StftConfig& stft_cfg,
                                const dsp::Compression& compression) {
  FinetuneResult result;
  if (cfg.run_stage1) {
    NS_CHECK(!stage1_corpus.empty(), InvalidInput, "finetune_encoder: empty stage-1 corpus");
    int classes = 0;
    auto segs = load_segments(stage1_corpus, stft_cfg, compression, false, &classes);
    result.stage1_classes = classes;
    result.stage1_accuracy =
        run_stage(backbone, segs, classes, cfg.stage1, cfg.seed, "encoder_stage1");
    NS_LOG << "finetune_encoder: stage 1 (" << classes << " noise types) train accuracy "
           << result.stage1_accuracy;
  }
  if (cfg.run_stage2) {
    NS_CHECK(!stage2_corpus.empty(), InvalidInput, "finetune_encoder: empty stage-2 corpus");
    int classes = 0;
    auto segs = load_segments(stage2_corpus, stft_cfg, compression, true, &classes);
    result.stage2_classes = classes;
    result.stage2_accuracy =
        run_stage(backbone, segs, classes, cfg.stage2, cfg.seed, "encoder_stage2");
    NS_LOG << "finetune_encoder: stage 2 (" << classes << " utterance classes) train accuracy "
           << result.stage2_accuracy;
  }
  return result;
}

}  // namespace noisesim::train
