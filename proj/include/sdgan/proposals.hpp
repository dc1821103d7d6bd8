// SPDX-License-Identifier: Apache-2.0
//
// 2D temporal proposal maps. A map over L clips is stored as an (L*L) x D
// matrix; row (j-1)*L + (k-1) holds the proposal spanning clips j..k. Only
// cells with j <= k are valid; every other row is exactly zero.

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/data_model.hpp"
#include "sdgan/params.hpp"

#include <random>
#include <string>
#include <vector>

namespace sdgan::proposals {

inline int cell_index(int length, int start, int end) { return (start - 1) * length + (end - 1); }
inline ClipSpan cell_span(int length, int row) { return {row / length + 1, row % length + 1}; }

/// Rows of the valid (upper-triangular) cells in row-major order.
std::vector<int> valid_cells(int length);
/// (L*L) x width matrix with ones on valid rows.
ag::Mat validity_mask(int length, Eigen::Index width);

/// Element-wise max over non-overlapping windows of n clips. n must divide T.
ag::Var aggregate_coarse(ag::Var features, int window);

/// Initial map: m_jk = max(f_j..f_k) + f_j + f_k on valid cells.
ag::Var initial_map(ag::Var features);

/// (L*L) x 9C patches of the 3x3 neighborhood of each valid cell. Invalid
/// source or target cells contribute zeros.
ag::Var masked_patches(ag::Var map, int length);

/// Adds <prefix>.conv{1,2}.{w,b}.
void init_params(ParamSet& params, const std::string& prefix, int hidden, std::mt19937_64& rng);

/// Two masked 3x3 convolutions with ReLU between.
ag::Var refine_map(Binder& bind, ag::Var initial, int length, const std::string& prefix);

/// initial_map followed by refine_map.
ag::Var build_map(Binder& bind, ag::Var features, const std::string& prefix);

/// Cosine score of every cell against every query: (L*L) x N, invalid rows 0.
ag::Var score_map(ag::Var map, ag::Var queries);

struct ScoreMap {
  int length = 0;
  ag::Mat scores;  // (L*L) x N

  [[nodiscard]] int num_queries() const { return static_cast<int>(scores.cols()); }
  [[nodiscard]] double at(int query, int start, int end) const { return scores(cell_index(length, start, end), query); }
};

struct RankedSpan {
  ClipSpan span;
  double score = 0.0;
};

/// Greedy NMS over valid cells in descending score order (ties: earlier start,
/// then shorter span). A candidate is dropped if its clip IoU with a kept span
/// exceeds nms_iou. Returns at most top_h spans.
std::vector<RankedSpan> rank_proposals(const ScoreMap& map, int query, int top_h, double nms_iou);

}  // namespace sdgan::proposals
