// SPDX-License-Identifier: Apache-2.0

#include "sdgan/losses.hpp"

#include "sdgan/errors.hpp"
#include "sdgan/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdgan::losses {

using ag::Mat;
using ag::Var;

void LossWeights::validate() const {
  for (double w : {query_clip, pna_coarse, pna_fine, dynamic, stat}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("loss weights must be finite and non-negative");
  }
  if (!(tau_pna > 0.0) || !(tau_contra > 0.0)) throw ValidationError("temperatures must be positive");
}

Var pna_loss(Var dynamic, Var stat, double tau) {
  if (dynamic.rows() != stat.rows() || dynamic.cols() != stat.cols()) throw ValidationError("pna_loss: shape mismatch");
  if (!(tau > 0.0)) throw ValidationError("pna_loss: temperature must be positive");
  const auto t = static_cast<int>(dynamic.rows());
  if (t <= 1) return dynamic.tape->constant(Mat::Zero(1, 1));
  Var logits = ag::scale(ag::matmul_nt(ag::l2_normalize_rows(dynamic), ag::l2_normalize_rows(stat)), 1.0 / tau);
  std::vector<std::pair<int, int>> diag;
  for (int i = 0; i < t; ++i) diag.emplace_back(i, i);
  return ag::mean(ag::sub(ag::logsumexp_rows(logits), ag::pick(logits, diag)));
}

Mat iou_targets(int length, const std::vector<ClipSpan>& truth, const std::optional<IoURescale>& rescale) {
  const auto cells = proposals::valid_cells(length);
  Mat t(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(truth.size()));
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q].end > length) throw ValidationError("ground-truth span exceeds map size");
    for (std::size_t r = 0; r < cells.size(); ++r) {
      double v = iou(proposals::cell_span(length, cells[r]), truth[q]);
      if (rescale) {
        if (!(rescale->hi > rescale->lo)) throw ValidationError("IoU rescale needs hi > lo");
        v = std::clamp((v - rescale->lo) / (rescale->hi - rescale->lo), 0.0, 1.0);
      }
      t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = v;
    }
  }
  return t;
}

Var iou_loss(Var scores, const Mat& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) throw ValidationError("iou_loss: shape mismatch");
  if (targets.size() == 0) throw ValidationError("iou_loss: no cells");
  if ((targets.array() < 0.0).any() || (targets.array() > 1.0).any() || !targets.allFinite()) {
    throw ValidationError("iou_loss: targets must lie in [0, 1]");
  }
  Var y = ag::clamp(ag::affine(scores, 0.5, 0.5), kProbEps, 1.0 - kProbEps);
  const Mat ones = Mat::Ones(targets.rows(), targets.cols());
  Var ll = ag::add(ag::hadamard_const(ag::log(y), targets), ag::hadamard_const(ag::log(ag::affine(y, -1.0, 1.0)), ones - targets));
  return ag::scale(ag::mean(ll), -1.0);
}

Var contra_loss(Var scores, const std::vector<int>& truth_rows, double tau) {
  const auto n = static_cast<int>(scores.cols());
  if (static_cast<int>(truth_rows.size()) != n) throw ValidationError("contra_loss: one ground-truth cell per query");
  if (n == 0) throw ValidationError("contra_loss: no queries");
  if (!(tau > 0.0)) throw ValidationError("contra_loss: temperature must be positive");
  Var logits = ag::scale(scores, 1.0 / tau);
  std::vector<std::pair<int, int>> truth;
  for (int q = 0; q < n; ++q) truth.emplace_back(truth_rows[static_cast<std::size_t>(q)], q);
  Var positive = ag::pick(logits, truth);  // n x 1
  // -log p(m_q | q): normalize each query's column over cells.
  Var over_cells = ag::sub(ag::sum(ag::logsumexp_cols(logits)), ag::sum(positive));
  // -log p(q | m_q): normalize the truth cell's row over queries.
  Var over_queries = ag::sub(ag::sum(ag::logsumexp_rows(ag::gather_rows(logits, truth_rows))), ag::sum(positive));
  return ag::add(over_cells, over_queries);
}

std::string to_string(Branch b) { return b == Branch::kCoarse ? "coarse" : "fine"; }

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  query_clip += o.query_clip;
  pna_coarse += o.pna_coarse;
  pna_fine += o.pna_fine;
  iou_dyn += o.iou_dyn;
  iou_sta += o.iou_sta;
  contra_dyn += o.contra_dyn;
  contra_sta += o.contra_sta;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double n) {
  query_clip /= n;
  pna_coarse /= n;
  pna_fine /= n;
  iou_dyn /= n;
  iou_sta /= n;
  contra_dyn /= n;
  contra_sta /= n;
  total /= n;
  return *this;
}

bool LossBreakdown::all_finite() const {
  for (double v : {query_clip, pna_coarse, pna_fine, iou_dyn, iou_sta, contra_dyn, contra_sta, total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string LossBreakdown::describe() const {
  std::ostringstream os;
  os << "L_QCCL=" << query_clip << " L_PNA_coarse=" << pna_coarse << " L_PNA_fine=" << pna_fine
     << " L_IoU_dyn=" << iou_dyn << " L_IoU_sta=" << iou_sta << " L_Contra_dyn=" << contra_dyn
     << " L_Contra_sta=" << contra_sta << " total=" << total;
  return os.str();
}

Var total_loss(ag::Tape& tape, const LossTerms& terms, const LossWeights& w) {
  w.validate();
  Var acc = tape.constant(Mat::Zero(1, 1));
  auto add = [&](const std::optional<Var>& term, double weight) {
    if (term && weight != 0.0) acc = ag::add(acc, ag::scale(*term, weight));
  };
  add(terms.query_clip, w.query_clip);
  add(terms.pna_coarse, w.pna_coarse);
  add(terms.pna_fine, w.pna_fine);
  add(terms.iou_dyn, w.dynamic);
  add(terms.contra_dyn, w.dynamic);
  add(terms.iou_sta, w.stat);
  add(terms.contra_sta, w.stat);
  return acc;
}

LossBreakdown breakdown(const LossTerms& terms, const Var& total) {
  auto v = [](const std::optional<Var>& t) { return t ? t->scalar() : 0.0; };
  LossBreakdown b;
  b.query_clip = v(terms.query_clip);
  b.pna_coarse = v(terms.pna_coarse);
  b.pna_fine = v(terms.pna_fine);
  b.iou_dyn = v(terms.iou_dyn);
  b.iou_sta = v(terms.iou_sta);
  b.contra_dyn = v(terms.contra_dyn);
  b.contra_sta = v(terms.contra_sta);
  b.total = total.scalar();
  return b;
}

}  // namespace sdgan::losses
