// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode differentiation over dense double matrices.
//
// Every value lives on a Tape as an Eigen matrix. Ops record a closure that
// pushes the node's gradient into its parents; Tape::backward replays them in
// reverse creation order. 3D tensors (L x L x D proposal maps) are stored as
// (L*L) x D matrices with row index i*L + j.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

namespace sdgan::ag {

using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  [[nodiscard]] const Mat& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const { return value()(0, 0); }
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that collects gradient (a parameter or an input under test).
  Var leaf(Mat value);
  /// Leaf that never receives gradient.
  Var constant(Mat value);

  /// Records an op. `backward` runs only if some parent needs a gradient.
  Var record(Mat value, std::vector<int> parents, Backward backward);

  [[nodiscard]] const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  [[nodiscard]] bool needs_grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)].needs_grad;
  }

  /// Gradient of the last backward() root w.r.t. node `id`; zeros if untouched.
  [[nodiscard]] Mat grad(int id) const;
  [[nodiscard]] Mat grad(Var v) const { return grad(v.id); }

  /// Adds `g` into the gradient buffer of `id` (no-op for constants).
  void accumulate(int id, const Mat& g);
  [[nodiscard]] const Mat& upstream(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  /// Seeds d(root)/d(root) = 1; root must be 1x1.
  void backward(Var root);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    bool has_grad = false;
    std::vector<int> parents;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Dense algebra
// ---------------------------------------------------------------------------
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// a * s + c elementwise.
Var affine(Var a, double s, double c);
/// Broadcast-adds a 1 x C row to every row of a.
Var add_row(Var a, Var row);
/// Broadcast-multiplies every row of a by a 1 x C row.
Var mul_row(Var a, Var row);
Var hadamard(Var a, Var b);
/// Elementwise product with a constant mask or weight matrix.
Var hadamard_const(Var a, const Mat& w);

// ---------------------------------------------------------------------------
// Pointwise
// ---------------------------------------------------------------------------
Var relu(Var a);
/// Exact GELU x * Phi(x).
Var gelu(Var a);
Var tanh(Var a);
/// log(1 + exp(x)), overflow-safe.
Var softplus(Var a);
Var log(Var a);
/// Clamp to [lo, hi]; gradient is zero where the clamp is active.
Var clamp(Var a, double lo, double hi);

// ---------------------------------------------------------------------------
// Reductions and indexing
// ---------------------------------------------------------------------------
Var sum(Var a);
Var mean(Var a);
/// R x 1 column of row-wise log-sum-exp.
Var logsumexp_rows(Var a);
/// 1 x C row of column-wise log-sum-exp.
Var logsumexp_cols(Var a);
/// K x 1 column of a(r_k, c_k).
Var pick(Var a, const std::vector<std::pair<int, int>>& cells);
Var gather_rows(Var a, const std::vector<int>& rows);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);

// ---------------------------------------------------------------------------
// Structured ops
// ---------------------------------------------------------------------------
/// Row-wise standardization to zero mean, unit variance (no affine).
Var layer_norm_rows(Var a, double eps);
/// Row-wise L2 normalization; zero rows map to zero rows.
Var l2_normalize_rows(Var a);
/// Causal exponential moving average down the rows:
/// h_0 = (1 - decay) x_0, h_t = decay * h_{t-1} + (1 - decay) x_t.
Var ema_rows(Var a, double decay);
/// T x (k*C) temporal patches centered on each row, zero padded (k odd).
Var im2col_1d(Var a, int kernel);
/// Element-wise max over non-overlapping windows of `window` rows.
Var window_max_rows(Var a, int window);

}  // namespace sdgan::ag
