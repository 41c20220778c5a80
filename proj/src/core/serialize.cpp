// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/core/serialize.hpp"

#include <cstring>
#include <fstream>

namespace noisesim {

namespace {

constexpr char kMagic[8] = {'N', 'S', 'A', 'R', 'C', 'H', '0', '1'};

template <typename T>
void wr(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T rd(std::ifstream& f, const std::string& path) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  NS_CHECK(f.good(), IoError, "load_archive: " << path << " is truncated or corrupt");
  return v;
}

}  // namespace

void save_archive(const std::string& path, const Archive& ar) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  NS_CHECK(f.good(), IoError, "save_archive: cannot open " << path);
  f.write(kMagic, sizeof(kMagic));
  wr<uint32_t>(f, kArchiveVersion);

  nlohmann::json header = ar.header;
  header["format_version"] = kArchiveVersion;
  const std::string htext = header.dump();
  wr<uint64_t>(f, htext.size());
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  wr<uint32_t>(f, static_cast<uint32_t>(ar.tensors.size()));
  for (const auto& [name, t] : ar.tensors) {
    wr<uint32_t>(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    wr<uint32_t>(f, static_cast<uint32_t>(t.shape().size()));
    for (int d : t.shape()) wr<int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  NS_CHECK(f.good(), IoError, "save_archive: failed writing " << path);
}

Archive load_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  NS_CHECK(f.good(), IoError, "load_archive: cannot open " << path);

  char magic[8];
  f.read(magic, sizeof(magic));
  NS_CHECK(f.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, IoError,
           "load_archive: " << path << " is not an archive file");
  const uint32_t version = rd<uint32_t>(f, path);
  NS_CHECK(version == kArchiveVersion, IoError,
           "load_archive: " << path << " has format version " << version << ", expected "
                            << kArchiveVersion);

  Archive ar;
  const uint64_t hlen = rd<uint64_t>(f, path);
  std::string htext(hlen, '\0');
  f.read(htext.data(), static_cast<std::streamsize>(hlen));
  NS_CHECK(f.good(), IoError, "load_archive: " << path << " is truncated or corrupt");
  try {
    ar.header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("load_archive: " + path + ": bad header: " + e.what());
  }

  const uint32_t count = rd<uint32_t>(f, path);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = rd<uint32_t>(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    NS_CHECK(f.good(), IoError, "load_archive: " << path << " is truncated or corrupt");
    const uint32_t rank = rd<uint32_t>(f, path);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(rd<int64_t>(f, path));
    std::vector<double> data(static_cast<size_t>(numel(shape)));
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
    NS_CHECK(f.good(), IoError, "load_archive: " << path << " is truncated or corrupt");
    ar.tensors.emplace(name, Tensor::from_vector(shape, std::move(data)));
  }
  return ar;
}

void load_params(const Archive& ar, ParamMap& params, const std::string& prefix) {
  for (auto& [name, t] : params.params) {
    const std::string key = prefix + name;
    auto it = ar.tensors.find(key);
    NS_CHECK(it != ar.tensors.end(), IoError, "load_params: archive has no tensor " << key);
    NS_CHECK(it->second.shape() == t.shape(), IoError,
             "load_params: shape mismatch for " << key << ": archive "
                                                << shape_str(it->second.shape()) << " vs model "
                                                << shape_str(t.shape()));
    const_cast<Tensor&>(t).vec() = it->second.vec();
  }
}

void store_params(Archive& ar, const ParamMap& params, const std::string& prefix) {
  for (const auto& [name, t] : params.params) ar.tensors[prefix + name] = t.detach();
}

}  // namespace noisesim
