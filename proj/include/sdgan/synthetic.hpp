// SPDX-License-Identifier: Apache-2.0
//
// Synthetic stand-in for the pretrained feature backbones. Each query gets a
// random ground-truth span; clips inside it carry an additive pattern derived
// from the query's mean token embedding, so a model can recover the span from
// the features alone. Within a video the patterns are orthogonalized in query
// order so that overlapping spans do not cancel each other.

#pragma once

#include "sdgan/corpus.hpp"

#include <cstdint>
#include <vector>

namespace sdgan::synth {

struct SynthConfig {
  int num_clips = 16;
  int raw_dim = 32;
  int vocab = 200;
  int embed_dim = 32;
  int min_tokens = 2;
  int max_tokens = 5;
  double signal_strength = 5.0;
  double noise_std = 0.1;
  /// Static stream refreshes one clip out of every `static_stride`.
  int static_stride = 4;
  std::uint64_t seed = 7;
};

struct SyntheticCorpus {
  Corpus corpus;
  /// Per video, per query: the planted span (1-based clips).
  std::vector<std::vector<ClipSpan>> spans;
  /// Per video, per query: unit planted direction in the dynamic stream.
  std::vector<std::vector<Eigen::VectorXd>> dynamic_patterns;
  /// Fixed projections from embedding space to each raw stream (D_raw x E).
  Eigen::MatrixXd dynamic_projection;
  Eigen::MatrixXd static_projection;
};

/// Deterministic in (cfg, num_videos, queries_per_video).
/// Throws ValidationError if num_videos < 1 or queries_per_video exceeds the
/// number of distinct spans T(T+1)/2.
SyntheticCorpus generate(const SynthConfig& cfg, int num_videos, int queries_per_video);

/// Unit-norm planted direction for a token bag in a stream.
Eigen::VectorXd pattern(const Eigen::MatrixXd& projection, const Eigen::MatrixXd& embeddings,
                        const std::vector<int>& tokens);

}  // namespace sdgan::synth
