// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/data/sampling.hpp"

#include <set>

#include "noisesim/core/rng.hpp"
#include "noisesim/dsp/wav.hpp"

namespace noisesim::data {

dsp::Compression fit_compression(const std::vector<const Manifest*>& manifests,
                                 const dsp::StftConfig& cfg) {
  std::vector<Eigen::MatrixXd> mags;
  for (const auto* m : manifests)
    for (const auto& e : m->entries)
      mags.push_back(dsp::stft(dsp::read_wav(e.audio_path), cfg).magnitude);
  std::vector<const Eigen::MatrixXd*> ptrs;
  ptrs.reserve(mags.size());
  for (const auto& m : mags) ptrs.push_back(&m);
  return dsp::fit_log1p_compression(ptrs);
}

SegmentPool build_pool(const Manifest& manifest, const dsp::StftConfig& cfg,
                       const dsp::Compression& compression) {
  SegmentPool pool;
  pool.stft_config = cfg;
  pool.compression = compression;
  for (const auto& e : manifest.entries) {
    dsp::Spectrogram s = dsp::stft(dsp::read_wav(e.audio_path), cfg);
    if (s.frames() < dsp::kSegmentFrames) {
      NS_WARN << "build_pool: skipping " << e.utterance_id << " (" << s.frames()
              << " frames < " << dsp::kSegmentFrames << ")";
      continue;
    }
    SegmentPool::Item item;
    item.utterance_id = e.utterance_id;
    item.magnitude = s.magnitude.unaryExpr([&](double m) { return compression.apply(m); });
    pool.items.push_back(std::move(item));
  }
  NS_CHECK(!pool.items.empty(), InvalidInput, "build_pool: no usable utterances");
  return pool;
}

EpochSampler::EpochSampler(const SegmentPool* clean, const SegmentPool* noisy, int batch_size,
                           uint64_t seed, int64_t epoch)
    : clean_(clean),
      noisy_(noisy),
      batch_size_(batch_size),
      offset_rng_(rng_stream(seed, "segment_offsets", static_cast<uint64_t>(epoch))) {
  NS_CHECK(clean_ && !clean_->items.empty() && noisy_ && !noisy_->items.empty(), InvalidInput,
           "EpochSampler: empty pool");
  NS_CHECK(batch_size_ >= 1, InvalidInput, "EpochSampler: batch size must be >= 1");

  // Unpairedness: the two pools must not share utterance ids.
  std::set<std::string> clean_ids;
  for (const auto& it : clean_->items) clean_ids.insert(it.utterance_id);
  for (const auto& it : noisy_->items)
    NS_CHECK(!clean_ids.count(it.utterance_id), InvalidInput,
             "EpochSampler: utterance " << it.utterance_id << " appears in both pools");

  const int64_t n = std::max(clean_->items.size(), noisy_->items.size());
  steps_ = (n + batch_size_ - 1) / batch_size_;

  Rng perm_rng = rng_stream(seed, "epoch_permutation", static_cast<uint64_t>(epoch));
  auto cycle_perm = [&](size_t pool_size, int64_t total) {
    std::vector<int> out;
    while (static_cast<int64_t>(out.size()) < total) {
      std::vector<int> p = perm_rng.permutation(static_cast<int>(pool_size));
      out.insert(out.end(), p.begin(), p.end());
    }
    out.resize(total);
    return out;
  };
  const int64_t total = steps_ * batch_size_;
  clean_perm_ = cycle_perm(clean_->items.size(), total);
  noisy_perm_ = cycle_perm(noisy_->items.size(), total);
}

bool EpochSampler::next(UnpairedBatch* out) {
  if (cursor_ >= steps_) return false;
  out->clean.clear();
  out->noisy.clear();
  out->noisy_utterance_ids.clear();

  auto crop = [&](const SegmentPool::Item& item) {
    const int frames = static_cast<int>(item.magnitude.cols());
    const int max_off = frames - dsp::kSegmentFrames;
    const int off = max_off > 0 ? static_cast<int>(offset_rng_.uniform_int(max_off + 1)) : 0;
    dsp::SpectrogramSegment seg;
    seg.utterance_id = item.utterance_id;
    seg.frame_offset = off;
    seg.valid_frames = dsp::kSegmentFrames;
    seg.padded_tail = false;
    seg.data = item.magnitude.middleCols(off, dsp::kSegmentFrames);
    return seg;
  };

  for (int b = 0; b < batch_size_; ++b) {
    const int64_t i = cursor_ * batch_size_ + b;
    out->clean.push_back(crop(clean_->items[clean_perm_[i]]));
    const auto& noisy_item = noisy_->items[noisy_perm_[i]];
    out->noisy.push_back(crop(noisy_item));
    out->noisy_utterance_ids.push_back(noisy_item.utterance_id);
  }
  ++cursor_;
  return true;
}

}  // namespace noisesim::data
