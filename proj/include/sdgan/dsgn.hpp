// SPDX-License-Identifier: Apache-2.0
//
// Dual-stream graph network: query-clip contrastive loss and adaptive
// temporal graphs (global top-K cosine edges from earlier to later clips,
// Gaussian RBF edge weights, ReLU message passing with a self term).

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/data_model.hpp"
#include "sdgan/params.hpp"

#include <random>
#include <vector>

namespace sdgan::dsgn {

/// Directed edge between 1-based clip nodes, src < dst.
struct Edge {
  int src = 0;
  int dst = 0;
  double cosine = 0.0;
  double weight = 0.0;
};

struct TemporalGraph {
  int num_nodes = 0;
  double sigma = 1.0;
  std::vector<Edge> edges;
};

/// exp(-d^2 / (2 sigma^2)).
double rbf(int distance, double sigma);

/// Cosine similarity; 0 when either vector is all zeros.
double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b);

/// Keeps the `k_edges` candidate pairs (i < j) with the highest cosine.
/// Ties go to the smaller temporal distance, then the smaller source index.
/// Edges are returned in that rank order.
TemporalGraph build_graph(const ag::Mat& features, int k_edges, double sigma);

/// T x T propagation matrix: 1 on the diagonal, rbf(j - i) at (j, i) for
/// every edge i -> j.
ag::Mat propagation_matrix(const TemporalGraph& graph);

struct GraphOptions {
  int k_edges = 60;
  int layers = 2;
  /// Non-positive means T / 8.
  double sigma = 0.0;
  /// Rebuild edges from the current features before every layer; otherwise
  /// build once from the input.
  bool rebuild_per_layer = true;
};

double resolved_sigma(const GraphOptions& opts, int num_clips);

/// Runs `opts.layers` rounds of f_i <- relu(sum_{j -> i} rbf(i-j) f_j + f_i).
/// Edge selection is not differentiated. If `frozen` is given, its graphs are
/// used instead of building new ones (one per layer, or one for all layers).
/// The graphs actually used are appended to `used` when non-null.
ag::Var graph_forward(ag::Var features, const GraphOptions& opts, const std::vector<TemporalGraph>* frozen = nullptr,
                      std::vector<TemporalGraph>* used = nullptr);

enum class Expectation { kMean, kSum };

void init_params(ParamSet& params, int hidden, std::mt19937_64& rng);

/// Query-clip contrastive loss with bilinear discriminator C(q, f) = q W f^T:
///   (1/N) sum_i [ E_{f in P_i} sp(-C(q_i, f)) + E_{f in N_i} sp(C(q_i, f)) ]
/// P_i are the clips of positives[i]; N_i the rest. An empty N_i contributes 0.
ag::Var qccl_loss(ag::Var queries, ag::Var clips, ag::Var discriminator, const std::vector<ClipSpan>& positives,
                  Expectation expectation = Expectation::kMean);

}  // namespace sdgan::dsgn
