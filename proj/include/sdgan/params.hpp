// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sdgan/autograd.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace sdgan {

/// Named parameter blocks in a stable (lexicographic) order.
class ParamSet {
 public:
  void set(const std::string& name, ag::Mat value);
  [[nodiscard]] const ag::Mat& at(const std::string& name) const;
  ag::Mat& at(const std::string& name);
  [[nodiscard]] bool contains(const std::string& name) const { return blocks_.count(name) != 0; }
  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] std::size_t size() const { return blocks_.size(); }
  [[nodiscard]] bool all_finite() const;

  auto begin() const { return blocks_.begin(); }
  auto end() const { return blocks_.end(); }
  auto begin() { return blocks_.begin(); }
  auto end() { return blocks_.end(); }

 private:
  std::map<std::string, ag::Mat> blocks_;
};

/// Glorot-uniform initialization for a fan_in x fan_out weight.
ag::Mat glorot(std::mt19937_64& rng, Eigen::Index fan_in, Eigen::Index fan_out);

/// Puts parameters on a tape on first use. With `trainable == false` they
/// become constants and no gradient is tracked.
class Binder {
 public:
  Binder(ag::Tape& tape, const ParamSet& params, bool trainable);

  ag::Var operator()(const std::string& name);
  [[nodiscard]] ag::Tape& tape() const { return *tape_; }

  /// Gradients of every bound parameter after tape().backward().
  [[nodiscard]] std::map<std::string, ag::Mat> gradients() const;

 private:
  ag::Tape* tape_;
  const ParamSet* params_;
  bool trainable_;
  std::map<std::string, ag::Var> bound_;
};

}  // namespace sdgan
