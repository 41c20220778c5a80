// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef NOISESIM_CORE_SERIALIZE_HPP_
#define NOISESIM_CORE_SERIALIZE_HPP_

#include <map>
#include <string>

#include "json.hpp"
#include "noisesim/core/tensor.hpp"

namespace noisesim {

// One-file checkpoint container: a JSON header followed by named raw-double
// tensor blobs. Loading is all-or-nothing; truncation or a bad magic/version
// raises IoError.
struct Archive {
  nlohmann::json header;
  std::map<std::string, Tensor> tensors;
};

inline constexpr uint32_t kArchiveVersion = 1;

void save_archive(const std::string& path, const Archive& ar);
Archive load_archive(const std::string& path);

// Copies archive tensors into an existing parameter map (shapes must match).
void load_params(const Archive& ar, ParamMap& params, const std::string& prefix = "");
// Snapshots a parameter map into archive tensors (detached copies).
void store_params(Archive& ar, const ParamMap& params, const std::string& prefix = "");

}  // namespace noisesim

#endif  // NOISESIM_CORE_SERIALIZE_HPP_
