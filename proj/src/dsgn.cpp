// SPDX-License-Identifier: Apache-2.0

#include "sdgan/dsgn.hpp"

#include "sdgan/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sdgan::dsgn {

using ag::Mat;
using ag::Var;

double rbf(int distance, double sigma) {
  const double d = static_cast<double>(distance);
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

TemporalGraph build_graph(const Mat& features, int k_edges, double sigma) {
  const auto t = static_cast<int>(features.rows());
  if (t < 2) throw ValidationError("graph needs at least two nodes");
  if (k_edges < 1) throw ValidationError("edge budget must be >= 1");
  if (!(sigma > 0.0)) throw ValidationError("rbf sigma must be positive");

  Eigen::VectorXd norms = features.rowwise().norm();
  std::vector<Edge> candidates;
  candidates.reserve(static_cast<std::size_t>(t) * (t - 1) / 2);
  for (int i = 0; i < t; ++i) {
    for (int j = i + 1; j < t; ++j) {
      const double denom = norms(i) * norms(j);
      const double c = denom == 0.0 ? 0.0 : features.row(i).dot(features.row(j)) / denom;
      candidates.push_back({i + 1, j + 1, c, rbf(j - i, sigma)});
    }
  }
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k_edges), candidates.size());
  auto ranked_before = [](const Edge& a, const Edge& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    const int da = a.dst - a.src;
    const int db = b.dst - b.src;
    if (da != db) return da < db;
    return a.src < b.src;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    ranked_before);
  candidates.resize(keep);
  return {t, sigma, std::move(candidates)};
}

Mat propagation_matrix(const TemporalGraph& graph) {
  Mat p = Mat::Identity(graph.num_nodes, graph.num_nodes);
  for (const Edge& e : graph.edges) p(e.dst - 1, e.src - 1) += e.weight;
  return p;
}

double resolved_sigma(const GraphOptions& opts, int num_clips) {
  return opts.sigma > 0.0 ? opts.sigma : num_clips / 8.0;
}

Var graph_forward(Var features, const GraphOptions& opts, const std::vector<TemporalGraph>* frozen,
                  std::vector<TemporalGraph>* used) {
  if (opts.layers < 0) throw ValidationError("graph layer count must be >= 0");
  const auto t = static_cast<int>(features.rows());
  const double sigma = resolved_sigma(opts, t);
  Var x = features;
  Mat prop;
  for (int layer = 0; layer < opts.layers; ++layer) {
    if (layer == 0 || opts.rebuild_per_layer) {
      TemporalGraph g;
      if (frozen != nullptr) {
        const std::size_t idx = opts.rebuild_per_layer ? static_cast<std::size_t>(layer) : 0;
        if (idx >= frozen->size()) throw std::invalid_argument("graph_forward: not enough frozen graphs");
        g = (*frozen)[idx];
      } else {
        g = build_graph(x.value(), opts.k_edges, sigma);
      }
      prop = propagation_matrix(g);
      if (used != nullptr) used->push_back(std::move(g));
    }
    x = ag::relu(ag::matmul(x.tape->constant(prop), x));
  }
  return x;
}

void init_params(ParamSet& params, int hidden, std::mt19937_64& rng) {
  params.set("qccl.w.dyn", glorot(rng, hidden, hidden));
  params.set("qccl.w.sta", glorot(rng, hidden, hidden));
}

Var qccl_loss(Var queries, Var clips, Var discriminator, const std::vector<ClipSpan>& positives, Expectation expectation) {
  const Eigen::Index n = queries.rows();
  const Eigen::Index t = clips.rows();
  if (static_cast<Eigen::Index>(positives.size()) != n) throw std::invalid_argument("qccl_loss: one span per query");
  if (n == 0) throw ValidationError("qccl_loss: no queries");
  Mat pos_w = Mat::Zero(n, t);
  Mat neg_w = Mat::Zero(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ClipSpan& s = positives[static_cast<std::size_t>(i)];
    if (s.end > t) throw ValidationError("qccl_loss: positive span exceeds clip count");
    const int np = s.length();
    const auto nn = static_cast<int>(t) - np;
    for (Eigen::Index c = 0; c < t; ++c) {
      const bool inside = c + 1 >= s.start && c + 1 <= s.end;
      if (inside) {
        pos_w(i, c) = expectation == Expectation::kMean ? 1.0 / np : 1.0;
      } else {
        neg_w(i, c) = expectation == Expectation::kMean ? 1.0 / nn : 1.0;
      }
    }
    if (nn == 0) log_warning("qccl: query " + std::to_string(i) + " covers the whole video; no negatives");
  }
  Var scores = ag::matmul_nt(ag::matmul(queries, discriminator), clips);
  Var pos = ag::hadamard_const(ag::softplus(ag::scale(scores, -1.0)), pos_w);
  Var neg = ag::hadamard_const(ag::softplus(scores), neg_w);
  return ag::scale(ag::sum(ag::add(pos, neg)), 1.0 / static_cast<double>(n));
}

}  // namespace sdgan::dsgn
