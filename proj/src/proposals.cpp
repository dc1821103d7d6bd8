// SPDX-License-Identifier: Apache-2.0

#include "sdgan/proposals.hpp"

#include "sdgan/errors.hpp"

#include <algorithm>
#include <array>

namespace sdgan::proposals {

using ag::Mat;
using ag::Var;

std::vector<int> valid_cells(int length) {
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(length) * (length + 1) / 2);
  for (int j = 1; j <= length; ++j) {
    for (int k = j; k <= length; ++k) rows.push_back(cell_index(length, j, k));
  }
  return rows;
}

Mat validity_mask(int length, Eigen::Index width) {
  Mat m = Mat::Zero(static_cast<Eigen::Index>(length) * length, width);
  for (int r : valid_cells(length)) m.row(r).setOnes();
  return m;
}

Var aggregate_coarse(Var features, int window) {
  if (window < 1 || features.rows() % window != 0) {
    throw ValidationError("window " + std::to_string(window) + " does not divide clip count " +
                          std::to_string(features.rows()));
  }
  return ag::window_max_rows(features, window);
}

Var initial_map(Var features) {
  const Mat& f = features.value();
  const auto len = static_cast<int>(f.rows());
  const Eigen::Index d = f.cols();
  if (len < 1) throw ValidationError("proposal map needs at least one clip");
  Mat out = Mat::Zero(static_cast<Eigen::Index>(len) * len, d);
  Eigen::MatrixXi arg = Eigen::MatrixXi::Constant(out.rows(), d, -1);
  for (int j = 0; j < len; ++j) {
    Eigen::RowVectorXd running = f.row(j);
    Eigen::RowVectorXi where = Eigen::RowVectorXi::Constant(d, j);
    for (int k = j; k < len; ++k) {
      for (Eigen::Index c = 0; c < d; ++c) {
        if (f(k, c) > running(c)) {
          running(c) = f(k, c);
          where(c) = k;
        }
      }
      const int row = j * len + k;
      out.row(row) = running + f.row(j) + f.row(k);
      arg.row(row) = where;
    }
  }
  return features.tape->record(std::move(out), {features.id}, [id = features.id, arg, len](ag::Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    Mat gf = Mat::Zero(len, g.cols());
    for (int j = 0; j < len; ++j) {
      for (int k = j; k < len; ++k) {
        const int row = j * len + k;
        gf.row(j) += g.row(row);
        gf.row(k) += g.row(row);
        for (Eigen::Index c = 0; c < g.cols(); ++c) gf(arg(row, c), c) += g(row, c);
      }
    }
    tp.accumulate(id, gf);
  });
}

Var masked_patches(Var map, int length) {
  const Mat& m = map.value();
  const Eigen::Index c = m.cols();
  if (m.rows() != static_cast<Eigen::Index>(length) * length) throw std::invalid_argument("masked_patches: bad map shape");
  Mat out = Mat::Zero(m.rows(), 9 * c);
  // (target row, slot, source row) for every live tap.
  std::vector<std::array<int, 3>> taps;
  for (int j = 0; j < length; ++j) {
    for (int k = j; k < length; ++k) {
      int slot = 0;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk, ++slot) {
          const int sj = j + dj;
          const int sk = k + dk;
          if (sj < 0 || sk < 0 || sj >= length || sk >= length || sj > sk) continue;
          const int target = j * length + k;
          const int source = sj * length + sk;
          out.block(target, slot * c, 1, c) = m.row(source);
          taps.push_back({target, slot, source});
        }
      }
    }
  }
  return map.tape->record(std::move(out), {map.id}, [id = map.id, taps, c](ag::Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    Mat gm = Mat::Zero(tp.value(id).rows(), c);
    for (const auto& [target, slot, source] : taps) gm.row(source) += g.block(target, slot * c, 1, c);
    tp.accumulate(id, gm);
  });
}

void init_params(ParamSet& params, const std::string& prefix, int hidden, std::mt19937_64& rng) {
  for (const char* layer : {".conv1", ".conv2"}) {
    params.set(prefix + layer + ".w", glorot(rng, 9 * hidden, hidden));
    params.set(prefix + layer + ".b", Mat::Zero(1, hidden));
  }
}

Var refine_map(Binder& bind, Var initial, int length, const std::string& prefix) {
  const Mat mask = validity_mask(length, bind(prefix + ".conv1.w").cols());
  auto conv = [&](Var x, const char* layer) {
    Var y = ag::add_row(ag::matmul(masked_patches(x, length), bind(prefix + layer + ".w")), bind(prefix + layer + ".b"));
    return ag::hadamard_const(y, mask);
  };
  return conv(ag::relu(conv(initial, ".conv1")), ".conv2");
}

Var build_map(Binder& bind, Var features, const std::string& prefix) {
  return refine_map(bind, initial_map(features), static_cast<int>(features.rows()), prefix);
}

Var score_map(Var map, Var queries) {
  if (map.cols() != queries.cols()) throw ValidationError("score_map: width mismatch");
  return ag::matmul_nt(ag::l2_normalize_rows(map), ag::l2_normalize_rows(queries));
}

std::vector<RankedSpan> rank_proposals(const ScoreMap& map, int query, int top_h, double nms_iou) {
  if (top_h < 1) throw ValidationError("top_h must be >= 1");
  if (query < 0 || query >= map.num_queries()) throw std::out_of_range("rank_proposals: query index");
  const int len = map.length;
  std::vector<RankedSpan> cands;
  for (int row : valid_cells(len)) cands.push_back({cell_span(len, row), map.scores(row, query)});
  std::stable_sort(cands.begin(), cands.end(), [](const RankedSpan& a, const RankedSpan& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.span.length() < b.span.length();
  });
  std::vector<RankedSpan> kept;
  for (const auto& c : cands) {
    if (static_cast<int>(kept.size()) >= top_h) break;
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const RankedSpan& k) { return iou(c.span, k.span) > nms_iou; });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

}  // namespace sdgan::proposals
