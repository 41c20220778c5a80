// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_DATA_MANIFEST_HPP_
#define NOISESIM_DATA_MANIFEST_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisesim/core/error.hpp"

namespace noisesim::data {

enum class Domain { kSourceClean, kTargetNoisy };

std::string domain_to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct ManifestEntry {
  std::string utterance_id;
  std::string audio_path;
  Domain domain = Domain::kSourceClean;
  std::optional<std::string> noise_type;
  std::optional<double> snr_db;
  // paired clean reference, when one exists (test sets, simulated pairs)
  std::optional<std::string> clean_path;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool contains(const std::string& id) const;
  const ManifestEntry& at(const std::string& id) const;
  void check_unique_ids() const;
};

struct DomainRules {
  Domain domain = Domain::kSourceClean;
  // noise_type from the parent directory, or a "type__rest" filename prefix
  bool infer_noise_type = true;
  // directory searched for a same-named clean reference file
  std::optional<std::string> clean_ref_dir;
  // verify that each file decodes; corrupt files are warned about and skipped
  bool validate_audio = true;
};

// Scans root_dir recursively for .wav files; deterministic lexicographic
// order by utterance id (relative path without extension).
Manifest build_manifest(const std::string& root_dir, const DomainRules& rules);

// Line-delimited records, one object per line.
void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path, bool validate_audio = false);

// Removes every test entry whose id appears in `used`.
Manifest exclude_from_test(const Manifest& test, const Manifest& used);

// The unpaired sampling protocol: n source-clean utterances and n
// target-noisy utterances, optionally stratified per noise type.
std::pair<Manifest, Manifest> sample_training_subset(const Manifest& source,
                                                     const Manifest& target, int n,
                                                     std::optional<int> per_noise_type,
                                                     uint64_t seed);

}  // namespace noisesim::data

#endif  // NOISESIM_DATA_MANIFEST_HPP_
