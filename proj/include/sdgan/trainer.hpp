// SPDX-License-Identifier: Apache-2.0
//
// Coarse/fine alternating training, AdamW updates, checkpoints and the
// fine-only inference path.

#pragma once

#include "sdgan/config.hpp"
#include "sdgan/corpus.hpp"
#include "sdgan/evaluation.hpp"
#include "sdgan/losses.hpp"
#include "sdgan/model.hpp"
#include "sdgan/params.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdgan::train {

/// Which granularity an epoch supervises. Under kPeht, epoch e (0-based) is
/// coarse when floor(e / period) is even.
class BranchSchedule {
 public:
  BranchSchedule(Schedule kind, int period);
  [[nodiscard]] losses::Branch branch(int epoch) const;

 private:
  Schedule kind_;
  int period_;
};

/// Decoupled weight decay Adam.
class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double eps, double weight_decay);
  void step(ParamSet& params, const std::map<std::string, ag::Mat>& grads);
  [[nodiscard]] long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, wd_;
  long t_ = 0;
  std::map<std::string, ag::Mat> m_, v_;
};

struct EpochLog {
  int epoch = 0;
  losses::Branch branch = losses::Branch::kCoarse;
  losses::LossBreakdown loss;
};

std::string loss_log_csv(const std::vector<EpochLog>& log);

struct Checkpoint {
  TrainConfig config;
  ParamSet params;
  int epoch = -1;
  double val_miou = 0.0;
};

/// Directory with manifest.json and one SDGF blob per parameter block.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

struct TrainOptions {
  /// When set: checkpoints/last, checkpoints/best and loss_log.csv go here.
  std::optional<std::filesystem::path> out_dir;
  /// Corpus for best-checkpoint selection; the training corpus if null.
  const Corpus* validation = nullptr;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  ParamSet params;
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_miou = -1.0;
};

/// Deterministic for a fixed (corpus, cfg). Throws NonFiniteLossError with the
/// component breakdown if any loss turns NaN/Inf.
TrainResult train(const Corpus& data, const TrainConfig& cfg, const TrainOptions& opts = {});

/// Ranked moments (seconds) for every query of one video.
std::vector<eval::QueryPrediction> infer_video(const ParamSet& params, const ModelConfig& cfg, const VideoRecord& video,
                                               const VideoFeatures& features, const ag::Mat& embeddings, int top_h,
                                               double nms_iou);
std::vector<eval::QueryPrediction> infer(const ParamSet& params, const ModelConfig& cfg, const Corpus& data, int top_h,
                                         double nms_iou);

}  // namespace sdgan::train
