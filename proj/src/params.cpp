// SPDX-License-Identifier: Apache-2.0

#include "sdgan/params.hpp"

#include <cmath>
#include <stdexcept>

namespace sdgan {

void ParamSet::set(const std::string& name, ag::Mat value) { blocks_[name] = std::move(value); }

const ag::Mat& ParamSet::at(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

ag::Mat& ParamSet::at(const std::string& name) {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(blocks_.size());
  for (const auto& [k, v] : blocks_) out.push_back(k);
  return out;
}

bool ParamSet::all_finite() const {
  for (const auto& [k, v] : blocks_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

ag::Mat glorot(std::mt19937_64& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  ag::Mat m(fan_in, fan_out);
  for (Eigen::Index r = 0; r < fan_in; ++r) {
    for (Eigen::Index c = 0; c < fan_out; ++c) m(r, c) = dist(rng);
  }
  return m;
}

Binder::Binder(ag::Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), params_(&params), trainable_(trainable) {}

ag::Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const ag::Mat& value = params_->at(name);
  ag::Var v = trainable_ ? tape_->leaf(value) : tape_->constant(value);
  bound_.emplace(name, v);
  return v;
}

std::map<std::string, ag::Mat> Binder::gradients() const {
  std::map<std::string, ag::Mat> out;
  for (const auto& [name, v] : bound_) out.emplace(name, tape_->grad(v));
  return out;
}

}  // namespace sdgan
