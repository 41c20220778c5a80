// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/data/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "noisesim/core/rng.hpp"
#include "noisesim/dsp/wav.hpp"

namespace noisesim::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string domain_to_string(Domain d) {
  return d == Domain::kSourceClean ? "source_clean" : "target_noisy";
}

Domain domain_from_string(const std::string& s) {
  if (s == "source_clean") return Domain::kSourceClean;
  if (s == "target_noisy") return Domain::kTargetNoisy;
  throw InvalidInput("unknown domain label: " + s);
}

bool Manifest::contains(const std::string& id) const {
  for (const auto& e : entries)
    if (e.utterance_id == id) return true;
  return false;
}

const ManifestEntry& Manifest::at(const std::string& id) const {
  for (const auto& e : entries)
    if (e.utterance_id == id) return e;
  throw InvalidInput("manifest: no such utterance id: " + id);
}

void Manifest::check_unique_ids() const {
  std::set<std::string> seen;
  for (const auto& e : entries)
    NS_CHECK(seen.insert(e.utterance_id).second, InvalidInput,
             "manifest: duplicate utterance id: " << e.utterance_id);
}

namespace {

std::optional<std::string> infer_noise_type(const fs::path& root, const fs::path& file) {
  const fs::path parent = file.parent_path();
  if (parent != root) return parent.filename().string();
  const std::string stem = file.stem().string();
  const size_t sep = stem.find("__");
  if (sep != std::string::npos && sep > 0) return stem.substr(0, sep);
  return std::nullopt;
}

// picks up an "snr<value>" token in the stem, e.g. foo_snr7.5.wav
std::optional<double> infer_snr(const std::string& stem) {
  size_t pos = stem.rfind("snr");
  if (pos == std::string::npos) return std::nullopt;
  const std::string tail = stem.substr(pos + 3);
  try {
    size_t used = 0;
    const double v = std::stod(tail, &used);
    if (used == 0) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

Manifest build_manifest(const std::string& root_dir, const DomainRules& rules) {
  const fs::path root(root_dir);
  NS_CHECK(fs::is_directory(root), InvalidInput, "build_manifest: no such directory: " << root_dir);

  std::vector<fs::path> files;
  for (const auto& p : fs::recursive_directory_iterator(root)) {
    if (!p.is_regular_file()) continue;
    std::string ext = p.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") files.push_back(p.path());
  }

  Manifest m;
  int skipped = 0;
  for (const auto& f : files) {
    if (rules.validate_audio) {
      try {
        dsp::read_wav(f.string());
      } catch (const std::exception& e) {
        NS_WARN << "build_manifest: skipping undecodable file " << f.string() << ": " << e.what();
        ++skipped;
        continue;
      }
    }
    ManifestEntry e;
    fs::path rel = fs::relative(f, root);
    rel.replace_extension();
    e.utterance_id = rel.generic_string();
    e.audio_path = fs::absolute(f).string();
    e.domain = rules.domain;
    if (rules.infer_noise_type) e.noise_type = infer_noise_type(root, f);
    e.snr_db = infer_snr(f.stem().string());
    if (rules.clean_ref_dir) {
      const fs::path ref = fs::path(*rules.clean_ref_dir) / f.filename();
      if (fs::exists(ref)) e.clean_path = fs::absolute(ref).string();
    }
    m.entries.push_back(std::move(e));
  }

  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) {
              return a.utterance_id < b.utterance_id;
            });
  m.check_unique_ids();
  NS_CHECK(!m.entries.empty(), InvalidInput,
           "build_manifest: no usable wav files under " << root_dir << " (" << skipped
                                                        << " skipped)");
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  NS_CHECK(f.good(), IoError, "save_manifest: cannot open " << path);
  for (const auto& e : m.entries) {
    json j;
    j["utterance_id"] = e.utterance_id;
    j["audio_path"] = e.audio_path;
    j["domain"] = domain_to_string(e.domain);
    if (e.noise_type) j["noise_type"] = *e.noise_type;
    if (e.snr_db) j["snr_db"] = *e.snr_db;
    if (e.clean_path) j["clean_path"] = *e.clean_path;
    f << j.dump() << "\n";
  }
  NS_CHECK(f.good(), IoError, "save_manifest: failed writing " << path);
}

Manifest load_manifest(const std::string& path, bool validate_audio) {
  std::ifstream f(path);
  NS_CHECK(f.good(), IoError, "load_manifest: cannot open " << path);
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError("load_manifest: " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ManifestEntry e;
    e.utterance_id = j.at("utterance_id").get<std::string>();
    e.audio_path = j.at("audio_path").get<std::string>();
    e.domain = domain_from_string(j.at("domain").get<std::string>());
    if (j.contains("noise_type")) e.noise_type = j["noise_type"].get<std::string>();
    if (j.contains("snr_db")) e.snr_db = j["snr_db"].get<double>();
    if (j.contains("clean_path")) e.clean_path = j["clean_path"].get<std::string>();
    m.entries.push_back(std::move(e));
  }
  m.check_unique_ids();
  if (validate_audio) {
    for (const auto& e : m.entries) {
      NS_CHECK(fs::exists(e.audio_path), IoError,
               "load_manifest: missing audio file " << e.audio_path);
      dsp::read_wav(e.audio_path);
    }
  }
  return m;
}

Manifest exclude_from_test(const Manifest& test, const Manifest& used) {
  std::set<std::string> used_ids;
  for (const auto& e : used.entries) used_ids.insert(e.utterance_id);
  Manifest out;
  for (const auto& e : test.entries)
    if (!used_ids.count(e.utterance_id)) out.entries.push_back(e);
  return out;
}

std::pair<Manifest, Manifest> sample_training_subset(const Manifest& source,
                                                     const Manifest& target, int n,
                                                     std::optional<int> per_noise_type,
                                                     uint64_t seed) {
  NS_CHECK(n > 0, InvalidInput, "sample_training_subset: n must be positive");
  NS_CHECK(static_cast<int>(source.size()) >= n, InvalidInput,
           "sample_training_subset: source has " << source.size() << " < " << n << " utterances");

  auto pick = [](const std::vector<const ManifestEntry*>& pool, int k, Rng& rng) {
    std::vector<int> perm = rng.permutation(static_cast<int>(pool.size()));
    std::vector<const ManifestEntry*> out;
    for (int i = 0; i < k; ++i) out.push_back(pool[perm[i]]);
    return out;
  };

  Rng rng_src = rng_stream(seed, "subset_source");
  Rng rng_tgt = rng_stream(seed, "subset_target");

  std::vector<const ManifestEntry*> src_pool;
  for (const auto& e : source.entries) src_pool.push_back(&e);
  std::vector<const ManifestEntry*> chosen_src = pick(src_pool, n, rng_src);

  std::vector<const ManifestEntry*> chosen_tgt;
  if (per_noise_type) {
    NS_CHECK(*per_noise_type > 0, InvalidInput, "sample_training_subset: bad per_noise_type");
    std::map<std::string, std::vector<const ManifestEntry*>> by_type;
    for (const auto& e : target.entries) {
      NS_CHECK(e.noise_type.has_value(), ConfigError,
               "sample_training_subset: stratified sampling requires noise_type labels; "
               "utterance "
                   << e.utterance_id << " has none");
      by_type[*e.noise_type].push_back(&e);
    }
    NS_CHECK(static_cast<int>(by_type.size()) * *per_noise_type == n, InvalidInput,
             "sample_training_subset: " << by_type.size() << " noise types x " << *per_noise_type
                                        << " != n = " << n);
    for (auto& [type, pool] : by_type) {
      NS_CHECK(static_cast<int>(pool.size()) >= *per_noise_type, InvalidInput,
               "sample_training_subset: noise type '"
                   << type << "' has only " << pool.size() << " utterances, need "
                   << *per_noise_type);
      auto picked = pick(pool, *per_noise_type, rng_tgt);
      chosen_tgt.insert(chosen_tgt.end(), picked.begin(), picked.end());
    }
  } else {
    NS_CHECK(static_cast<int>(target.size()) >= n, InvalidInput,
             "sample_training_subset: target has " << target.size() << " < " << n
                                                   << " utterances");
    std::vector<const ManifestEntry*> tgt_pool;
    for (const auto& e : target.entries) tgt_pool.push_back(&e);
    chosen_tgt = pick(tgt_pool, n, rng_tgt);
  }

  auto finalize = [](std::vector<const ManifestEntry*> chosen) {
    std::sort(chosen.begin(), chosen.end(), [](const ManifestEntry* a, const ManifestEntry* b) {
      return a->utterance_id < b->utterance_id;
    });
    Manifest m;
    for (const auto* e : chosen) m.entries.push_back(*e);
    return m;
  };
  return {finalize(std::move(chosen_src)), finalize(std::move(chosen_tgt))};
}

}  // namespace noisesim::data
