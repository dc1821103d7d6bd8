// SPDX-License-Identifier: Apache-2.0

#include "sdgan/fusion.hpp"

#include "sdgan/errors.hpp"

namespace sdgan::fusion {

using ag::Mat;
using ag::Var;

void init_params(ParamSet& params, int hidden, std::mt19937_64& rng) {
  for (const char* ln : {"fusion.ln1", "fusion.ln2"}) {
    params.set(std::string(ln) + ".g", Mat::Ones(1, hidden));
    params.set(std::string(ln) + ".b", Mat::Zero(1, hidden));
  }
  params.set("fusion.mlp.w1", glorot(rng, hidden, 4 * hidden));
  params.set("fusion.mlp.b1", Mat::Zero(1, 4 * hidden));
  params.set("fusion.mlp.w2", glorot(rng, 4 * hidden, hidden));
  params.set("fusion.mlp.b2", Mat::Zero(1, hidden));
}

Var layer_norm(Binder& bind, Var x, const std::string& prefix) {
  return ag::add_row(ag::mul_row(ag::layer_norm_rows(x, kLayerNormEps), bind(prefix + ".g")), bind(prefix + ".b"));
}

FusedStreams fuse(Binder& bind, Var dynamic, Var stat, Var query, const FusionOptions& opts) {
  const Eigen::Index d = dynamic.cols();
  if (d == 0) throw ValidationError("fusion: feature width must be positive");
  if (stat.cols() != d || query.cols() != d) throw ValidationError("fusion: stream widths differ");
  if (stat.rows() != dynamic.rows()) throw ValidationError("fusion: dynamic and static clip counts differ");
  const Eigen::Index t = dynamic.rows();
  const Eigen::Index n = query.rows();

  Var stacked = ag::concat_rows({dynamic, stat, query});
  auto mlp = [&](Var x) {
    Var h = ag::gelu(ag::add_row(ag::matmul(x, bind("fusion.mlp.w1")), bind("fusion.mlp.b1")));
    return ag::add_row(ag::matmul(h, bind("fusion.mlp.w2")), bind("fusion.mlp.b2"));
  };
  Var out;
  if (opts.literal_residual_norm) {
    Var tilde = ag::add(stacked, layer_norm(bind, stacked, "fusion.ln1"));
    out = layer_norm(bind, ag::add(tilde, mlp(tilde)), "fusion.ln2");
  } else {
    out = layer_norm(bind, ag::add(stacked, mlp(layer_norm(bind, stacked, "fusion.ln1"))), "fusion.ln2");
  }
  return {ag::slice_rows(out, 0, t), ag::slice_rows(out, t, t), ag::slice_rows(out, 2 * t, n)};
}

}  // namespace sdgan::fusion
