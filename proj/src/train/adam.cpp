// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/train/adam.hpp"

#include <cmath>

namespace noisesim::train {

void Adam::step(ParamMap& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, param] : params.params) {
    Tensor& p = const_cast<Tensor&>(param);
    if (p.grad().empty()) continue;
    Moments& mom = state_[name];
    if (mom.m.size() != static_cast<size_t>(p.size())) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
    }
    const std::vector<double>& g = p.grad();
    double* value = p.data();
    for (int64_t i = 0; i < p.size(); ++i) {
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::store(Archive& ar, const std::string& prefix) const {
  ar.header[prefix + "t"] = t_;
  ar.header[prefix + "lr"] = cfg_.lr;
  ar.header[prefix + "beta1"] = cfg_.beta1;
  ar.header[prefix + "beta2"] = cfg_.beta2;
  ar.header[prefix + "eps"] = cfg_.eps;
  for (const auto& [name, mom] : state_) {
    ar.tensors[prefix + "m." + name] =
        Tensor::from_vector({static_cast<int>(mom.m.size())}, mom.m);
    ar.tensors[prefix + "v." + name] =
        Tensor::from_vector({static_cast<int>(mom.v.size())}, mom.v);
  }
}

void Adam::load(const Archive& ar, const std::string& prefix) {
  t_ = ar.header.at(prefix + "t").get<int64_t>();
  cfg_.lr = ar.header.at(prefix + "lr").get<double>();
  cfg_.beta1 = ar.header.at(prefix + "beta1").get<double>();
  cfg_.beta2 = ar.header.at(prefix + "beta2").get<double>();
  cfg_.eps = ar.header.at(prefix + "eps").get<double>();
  state_.clear();
  const std::string mkey = prefix + "m.";
  for (const auto& [name, t] : ar.tensors) {
    if (name.rfind(mkey, 0) != 0) continue;
    const std::string pname = name.substr(mkey.size());
    Moments mom;
    mom.m = t.vec();
    mom.v = ar.tensors.at(prefix + "v." + pname).vec();
    state_.emplace(pname, std::move(mom));
  }
}

}  // namespace noisesim::train
