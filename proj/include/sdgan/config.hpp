// SPDX-License-Identifier: Apache-2.0
//
// Flat key = value run configuration. Every hyperparameter has an explicit
// key; to_kv() emits all of them so manifests record the effective values.

#pragma once

#include "sdgan/dsgn.hpp"
#include "sdgan/fusion.hpp"
#include "sdgan/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sdgan {

enum class Schedule { kPeht, kFineOnly, kCoarseOnly };

struct ModelConfig {
  int hidden = 32;
  int raw_dim = 32;
  int embed_dim = 32;
  int clips = 16;
  int window = 2;
  double ema_decay = 0.5;
  fusion::FusionOptions fusion;
  dsgn::GraphOptions graph;
  dsgn::Expectation qccl_expectation = dsgn::Expectation::kMean;
  losses::LossWeights weights;
  bool iou_rescale = false;
  double iou_rescale_lo = 0.0;
  double iou_rescale_hi = 1.0;
  /// Keep L_QCCL / L_PNA,coarse active during coarse epochs as well as fine.
  bool qccl_in_coarse = true;
  bool pna_in_coarse = true;
  bool qccl_in_fine = true;
  bool pna_in_fine = true;

  void validate() const;
};

struct TrainConfig {
  ModelConfig model;
  Schedule schedule = Schedule::kPeht;
  int peht_period = 10;
  double learning_rate = 1.5e-3;
  int batch_size = 4;
  int epochs = 60;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int top_h = 5;
  double nms_iou = 0.5;

  void validate() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues to_kv(const TrainConfig& cfg);
/// Applies key = value pairs on top of `base`; unknown keys are rejected.
TrainConfig apply_kv(TrainConfig base, const KeyValues& kv);

/// Parses "key = value" lines; '#' starts a comment.
KeyValues parse_kv_text(const std::string& text, const std::string& source);
TrainConfig load_config(const std::filesystem::path& path);
std::string format_kv(const KeyValues& kv);

/// SDGAN_SEED, when set, replaces cfg.seed.
void apply_env_overrides(TrainConfig& cfg);

}  // namespace sdgan
