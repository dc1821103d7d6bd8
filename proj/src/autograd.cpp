// SPDX-License-Identifier: Apache-2.0

#include "sdgan/autograd.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdgan::ag {

const Mat& Var::value() const { return tape->value(id); }

Var Tape::leaf(Mat value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Mat value, std::vector<int> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) {
    if (nodes_[static_cast<std::size_t>(p)].needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) {
    n.parents = std::move(parents);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Mat Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw std::logic_error("gradient shape mismatch on node " + std::to_string(id));
  }
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(Var root) {
  if (root.rows() != 1 || root.cols() != 1) throw std::invalid_argument("backward root must be scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root.id, Mat::Constant(1, 1, 1.0));
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Every output entry sums over the inner index in ascending order whatever its
// position, so permuting the rows of `a` permutes the result bit for bit.
// Blocked GEMM kernels do not guarantee that.
Mat row_stable_product(const Mat& a, const Mat& b) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rb = b;
  RowMajor out = RowMajor::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s != 0.0) out.row(i) += s * rb.row(k);
    }
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Tape& t = *a.tape;
  return t.record(row_stable_product(a.value(), b.value()), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.needs_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Tape& t = *a.tape;
  return t.record(row_stable_product(a.value(), b.value().transpose()), {a.id, b.id},
                  [a = a.id, b = b.id](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(b));
    if (tp.needs_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape->record(a.value() + b.value(), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    tp.accumulate(a, tp.upstream(self));
    tp.accumulate(b, tp.upstream(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape->record(a.value() - b.value(), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    tp.accumulate(a, tp.upstream(self));
    tp.accumulate(b, -tp.upstream(self));
  });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double s, double c) {
  Mat out = (a.value().array() * s + c).matrix();
  return a.tape->record(std::move(out), {a.id},
                        [a = a.id, s](Tape& tp, int self) { tp.accumulate(a, tp.upstream(self) * s); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bias shape mismatch");
  Mat out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), {a.id, row.id}, [a = a.id, r = row.id](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    tp.accumulate(a, g);
    if (tp.needs_grad(r)) tp.accumulate(r, g.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("mul_row: shape mismatch");
  Mat out = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape->record(std::move(out), {a.id, row.id}, [a = a.id, r = row.id](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    if (tp.needs_grad(a)) tp.accumulate(a, (g.array().rowwise() * tp.value(r).row(0).array()).matrix());
    if (tp.needs_grad(r)) tp.accumulate(r, (g.array() * tp.value(a).array()).colwise().sum().matrix());
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Mat out = a.value().cwiseProduct(b.value());
  return a.tape->record(std::move(out), {a.id, b.id}, [a = a.id, b = b.id](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
    if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
  });
}

Var hadamard_const(Var a, const Mat& w) {
  require_same_shape(a.value(), w, "hadamard_const");
  return a.tape->record(a.value().cwiseProduct(w), {a.id},
                        [a = a.id, w](Tape& tp, int self) { tp.accumulate(a, tp.upstream(self).cwiseProduct(w)); });
}

Var relu(Var a) {
  Mat out = a.value().cwiseMax(0.0);
  return a.tape->record(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    Mat g = (tp.value(a).array() > 0.0).select(tp.upstream(self), 0.0);
    tp.accumulate(a, g);
  });
}

Var gelu(Var a) {
  Mat out = a.value().unaryExpr([](double x) { return x * normal_cdf(x); });
  return a.tape->record(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    Mat d = tp.value(a).unaryExpr([](double x) {
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return normal_cdf(x) + x * pdf;
    });
    tp.accumulate(a, tp.upstream(self).cwiseProduct(d));
  });
}

Var tanh(Var a) {
  Mat out = a.value().array().tanh().matrix();
  return a.tape->record(out, {a.id}, [a = a.id, out](Tape& tp, int self) {
    tp.accumulate(a, (tp.upstream(self).array() * (1.0 - out.array().square())).matrix());
  });
}

Var softplus(Var a) {
  Mat out = a.value().unaryExpr(&stable_softplus);
  return a.tape->record(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    tp.accumulate(a, tp.upstream(self).cwiseProduct(tp.value(a).unaryExpr(&sigmoid)));
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw std::domain_error("log: non-positive input");
  Mat out = a.value().array().log().matrix();
  return a.tape->record(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    tp.accumulate(a, tp.upstream(self).cwiseQuotient(tp.value(a)));
  });
}

Var clamp(Var a, double lo, double hi) {
  Mat out = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape->record(std::move(out), {a.id}, [a = a.id, lo, hi](Tape& tp, int self) {
    const Mat& x = tp.value(a);
    Mat g = ((x.array() >= lo) && (x.array() <= hi)).select(tp.upstream(self), 0.0);
    tp.accumulate(a, g);
  });
}

Var sum(Var a) {
  Mat out = Mat::Constant(1, 1, a.value().sum());
  return a.tape->record(std::move(out), {a.id}, [a = a.id](Tape& tp, int self) {
    const Mat& x = tp.value(a);
    tp.accumulate(a, Mat::Constant(x.rows(), x.cols(), tp.upstream(self)(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean of empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var logsumexp_rows(Var a) {
  const Mat& x = a.value();
  if (x.cols() == 0) throw std::invalid_argument("logsumexp_rows: no columns");
  Mat out(x.rows(), 1);
  Mat soft(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const Eigen::ArrayXd e = (x.row(r).array() - m).exp().transpose();
    const double s = e.sum();
    out(r, 0) = m + std::log(s);
    soft.row(r) = (e / s).transpose().matrix();
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, soft](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    tp.accumulate(a, (soft.array().colwise() * g.col(0).array()).matrix());
  });
}

Var logsumexp_cols(Var a) {
  const Mat& x = a.value();
  if (x.rows() == 0) throw std::invalid_argument("logsumexp_cols: no rows");
  Mat out(1, x.cols());
  Mat soft(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double m = x.col(c).maxCoeff();
    const Eigen::ArrayXd e = (x.col(c).array() - m).exp();
    const double s = e.sum();
    out(0, c) = m + std::log(s);
    soft.col(c) = (e / s).matrix();
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, soft](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    tp.accumulate(a, (soft.array().rowwise() * g.row(0).array()).matrix());
  });
}

Var pick(Var a, const std::vector<std::pair<int, int>>& cells) {
  const Mat& x = a.value();
  Mat out(static_cast<Eigen::Index>(cells.size()), 1);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto [r, c] = cells[k];
    if (r < 0 || c < 0 || r >= x.rows() || c >= x.cols()) throw std::out_of_range("pick: cell out of range");
    out(static_cast<Eigen::Index>(k), 0) = x(r, c);
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, cells](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    const Mat& x = tp.value(a);
    Mat ga = Mat::Zero(x.rows(), x.cols());
    for (std::size_t k = 0; k < cells.size(); ++k) ga(cells[k].first, cells[k].second) += g(static_cast<Eigen::Index>(k), 0);
    tp.accumulate(a, ga);
  });
}

Var gather_rows(Var a, const std::vector<int>& rows) {
  const Mat& x = a.value();
  Mat out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= x.rows()) throw std::out_of_range("gather_rows: row out of range");
    out.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, rows](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    const Mat& x = tp.value(a);
    Mat ga = Mat::Zero(x.rows(), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
    tp.accumulate(a, ga);
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: nothing to concatenate");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    total += p.rows();
  }
  Mat out(total, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(at);
    at += p.rows();
  }
  return parts.front().tape->record(std::move(out), ids, [ids, offsets](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.needs_grad(ids[k])) continue;
      tp.accumulate(ids[k], g.middleRows(offsets[k], tp.value(ids[k]).rows()));
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows: range out of bounds");
  Mat out = a.value().middleRows(start, count);
  return a.tape->record(std::move(out), {a.id}, [a = a.id, start, count](Tape& tp, int self) {
    const Mat& x = tp.value(a);
    Mat ga = Mat::Zero(x.rows(), x.cols());
    ga.middleRows(start, count) = tp.upstream(self);
    tp.accumulate(a, ga);
  });
}

Var layer_norm_rows(Var a, double eps) {
  const Mat& x = a.value();
  const auto d = static_cast<double>(x.cols());
  if (x.cols() == 0) throw std::invalid_argument("layer_norm_rows: zero width");
  Mat out(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / d;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    out.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  return a.tape->record(out, {a.id}, [a = a.id, out, inv_std, d](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    Mat ga(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double gm = g.row(r).mean();
      const double gy = g.row(r).dot(out.row(r)) / d;
      ga.row(r) = inv_std(r) * (g.row(r).array() - gm - out.row(r).array() * gy);
    }
    tp.accumulate(a, ga);
  });
}

Var l2_normalize_rows(Var a) {
  const Mat& x = a.value();
  Mat out = Mat::Zero(x.rows(), x.cols());
  Eigen::VectorXd norms(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    norms(r) = x.row(r).norm();
    if (norms(r) > 0.0) out.row(r) = x.row(r) / norms(r);
  }
  return a.tape->record(out, {a.id}, [a = a.id, out, norms](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    Mat ga = Mat::Zero(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (norms(r) == 0.0) continue;
      ga.row(r) = (g.row(r) - out.row(r) * g.row(r).dot(out.row(r))) / norms(r);
    }
    tp.accumulate(a, ga);
  });
}

Var ema_rows(Var a, double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw std::invalid_argument("ema_rows: decay must be in [0, 1)");
  const Mat& x = a.value();
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = (1.0 - decay) * x.row(r);
    if (r > 0) out.row(r) += decay * out.row(r - 1);
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, decay](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    Mat ga(g.rows(), g.cols());
    RowVec carry = RowVec::Zero(g.cols());
    for (Eigen::Index r = g.rows() - 1; r >= 0; --r) {
      carry = g.row(r) + decay * carry;
      ga.row(r) = (1.0 - decay) * carry;
    }
    tp.accumulate(a, ga);
  });
}

Var im2col_1d(Var a, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("im2col_1d: kernel must be odd");
  const Mat& x = a.value();
  const Eigen::Index rows = x.rows();
  const Eigen::Index c = x.cols();
  const int half = kernel / 2;
  Mat out = Mat::Zero(rows, c * kernel);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = r + k - half;
      if (src < 0 || src >= rows) continue;
      out.block(r, k * c, 1, c) = x.row(src);
    }
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, kernel, half, c](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    const Eigen::Index rows = g.rows();
    Mat ga = Mat::Zero(rows, c);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (int k = 0; k < kernel; ++k) {
        const Eigen::Index src = r + k - half;
        if (src < 0 || src >= rows) continue;
        ga.row(src) += g.block(r, k * c, 1, c);
      }
    }
    tp.accumulate(a, ga);
  });
}

Var window_max_rows(Var a, int window) {
  const Mat& x = a.value();
  if (window < 1 || x.rows() % window != 0) throw std::invalid_argument("window_max_rows: window must divide row count");
  const Eigen::Index out_rows = x.rows() / window;
  Mat out(out_rows, x.cols());
  Eigen::MatrixXi arg(out_rows, x.cols());
  for (Eigen::Index w = 0; w < out_rows; ++w) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = w * window;
      for (Eigen::Index r = best + 1; r < (w + 1) * window; ++r) {
        if (x(r, c) > x(best, c)) best = r;
      }
      out(w, c) = x(best, c);
      arg(w, c) = static_cast<int>(best);
    }
  }
  return a.tape->record(std::move(out), {a.id}, [a = a.id, arg](Tape& tp, int self) {
    const Mat& g = tp.upstream(self);
    const Mat& x = tp.value(a);
    Mat ga = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index w = 0; w < g.rows(); ++w) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) ga(arg(w, c), c) += g(w, c);
    }
    tp.accumulate(a, ga);
  });
}

}  // namespace sdgan::ag
