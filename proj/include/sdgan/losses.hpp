// SPDX-License-Identifier: Apache-2.0
//
// Position-wise node alignment (InfoNCE), IoU regression, query-proposal
// contrastive loss, and their weighted composite.

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/data_model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace sdgan::losses {

inline constexpr double kProbEps = 1e-6;

struct LossWeights {
  double query_clip = 1.0;    // lambda_Q
  double pna_coarse = 1.0;    // lambda_C
  double pna_fine = 0.0;      // lambda_F
  double dynamic = 0.6;       // lambda_D
  double stat = 0.4;          // lambda_S
  double tau_pna = 0.1;
  double tau_contra = 1.0;

  /// Throws ValidationError on negative weights or non-positive temperatures.
  void validate() const;
};

/// -(1/T) sum_t log softmax_t'( cos(dyn_t, sta_t') / tau )[t]. Zero for T = 1.
ag::Var pna_loss(ag::Var dynamic, ag::Var stat, double tau);

/// Optional linear rescale of raw IoU: (iou - lo) / (hi - lo), clamped to [0, 1].
struct IoURescale {
  double lo = 0.0;
  double hi = 1.0;
};

/// IoU of every valid cell of an L-clip map against each ground-truth span:
/// V x N where V = L(L+1)/2 in valid_cells() order.
ag::Mat iou_targets(int length, const std::vector<ClipSpan>& truth, const std::optional<IoURescale>& rescale = {});

/// -(1/M) sum [t log y + (1-t) log(1-y)], y = clamp((s+1)/2, eps, 1-eps).
/// `scores` and `targets` share a shape; M is their element count.
ag::Var iou_loss(ag::Var scores, const ag::Mat& targets);

/// scores: V x N cosine scores over valid cells; truth_rows[q] is the row of
/// query q's ground-truth cell.
///   -( sum_q log p(m_q | q) + sum_q log p(q | m_q) )
/// with both conditionals softmaxes of scores / tau (over cells, over queries).
ag::Var contra_loss(ag::Var scores, const std::vector<int>& truth_rows, double tau);

enum class Branch { kCoarse, kFine };
std::string to_string(Branch b);

/// Component values, in CSV column order.
struct LossBreakdown {
  double query_clip = 0.0;
  double pna_coarse = 0.0;
  double pna_fine = 0.0;
  double iou_dyn = 0.0;
  double iou_sta = 0.0;
  double contra_dyn = 0.0;
  double contra_sta = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator/=(double n);
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] std::string describe() const;
};

inline constexpr const char* kBreakdownHeader =
    "epoch,branch,L_QCCL,L_PNA_coarse,L_PNA_fine,L_IoU_dyn,L_IoU_sta,L_Contra_dyn,L_Contra_sta,total";

struct LossTerms {
  std::optional<ag::Var> query_clip;
  std::optional<ag::Var> pna_coarse;
  std::optional<ag::Var> pna_fine;
  std::optional<ag::Var> iou_dyn;
  std::optional<ag::Var> iou_sta;
  std::optional<ag::Var> contra_dyn;
  std::optional<ag::Var> contra_sta;
};

/// lambda_Q Q + lambda_C PNAc + lambda_F PNAf + lambda_D (IoU_d + Con_d)
/// + lambda_S (IoU_s + Con_s). Absent or zero-weighted terms are skipped.
ag::Var total_loss(ag::Tape& tape, const LossTerms& terms, const LossWeights& w);

/// Values of the present terms plus the composite.
LossBreakdown breakdown(const LossTerms& terms, const ag::Var& total);

}  // namespace sdgan::losses
