// SPDX-License-Identifier: Apache-2.0
//
// Full network: encoders -> fusion -> dual-stream graphs -> coarse/fine
// proposal maps -> cosine score maps, plus the training losses.

#pragma once

#include "sdgan/config.hpp"
#include "sdgan/corpus.hpp"
#include "sdgan/dsgn.hpp"
#include "sdgan/losses.hpp"
#include "sdgan/params.hpp"
#include "sdgan/proposals.hpp"

#include <cstdint>
#include <vector>

namespace sdgan {

/// Everything the network needs about one video.
struct VideoInput {
  ag::Mat dynamic;         // T x D_raw
  ag::Mat stat;            // T x D_raw
  ag::Mat pooled_queries;  // N x E
  /// Covering span of each query's moment (IoU and contrastive targets).
  std::vector<ClipSpan> truth;
  /// Clips fully inside each moment (QCCL positives).
  std::vector<ClipSpan> positives;
};

VideoInput make_input(const VideoRecord& video, const VideoFeatures& features, const ag::Mat& embeddings);

enum class Mode {
  kTrain,  // losses for the requested branch
  kInfer,  // fine score maps only, no QCCL, no coarse branch
};

struct ForwardResult {
  /// Fine score maps per stream and their weighted combination (used for ranking).
  proposals::ScoreMap fine_dynamic;
  proposals::ScoreMap fine_static;
  proposals::ScoreMap fine_combined;
  std::vector<dsgn::TemporalGraph> graphs_dynamic;
  std::vector<dsgn::TemporalGraph> graphs_static;
  losses::LossBreakdown loss;
  ag::Var total;  // valid in kTrain mode
};

ParamSet init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Runs the network on `bind`'s tape. In kTrain mode the fine maps are built
/// only on fine epochs; in kInfer mode `branch` is ignored.
ForwardResult forward(Binder& bind, const ModelConfig& cfg, const VideoInput& input, Mode mode,
                      losses::Branch branch = losses::Branch::kFine);

/// (w_D S_dyn + w_S S_sta) / (w_D + w_S); plain mean if both weights are 0.
ag::Mat combine_scores(const ag::Mat& dynamic, const ag::Mat& stat, const losses::LossWeights& w);

}  // namespace sdgan
