// SPDX-License-Identifier: Apache-2.0

#include "sdgan/encoders.hpp"

#include "sdgan/errors.hpp"

namespace sdgan::encoders {

using ag::Mat;
using ag::Var;

namespace {

void require_finite(const Var& v, const char* what) {
  if (!v.value().allFinite()) throw ValidationError(std::string(what) + ": non-finite input");
}

}  // namespace

void init_params(ParamSet& params, const EncoderDims& dims, std::mt19937_64& rng) {
  const int d = dims.hidden;
  params.set("enc.dyn.conv.w", glorot(rng, kConvWidth * dims.raw_dim, d));
  params.set("enc.dyn.conv.b", Mat::Zero(1, d));
  params.set("enc.dyn.lin.w", glorot(rng, d, d));
  params.set("enc.dyn.lin.b", Mat::Zero(1, d));
  params.set("enc.sta.in.w", glorot(rng, dims.raw_dim, d));
  params.set("enc.sta.in.b", Mat::Zero(1, d));
  params.set("enc.sta.gate.w", glorot(rng, d, d));
  params.set("enc.qry.lin.w", glorot(rng, dims.embed_dim, d));
  params.set("enc.qry.lin.b", Mat::Zero(1, d));
}

Var encode_dynamic(Binder& bind, Var raw) {
  if (raw.rows() < kConvWidth) throw ValidationError("dynamic encoder needs at least 3 clips");
  require_finite(raw, "encode_dynamic");
  Var conv = ag::add_row(ag::matmul(ag::im2col_1d(raw, kConvWidth), bind("enc.dyn.conv.w")), bind("enc.dyn.conv.b"));
  return ag::add_row(ag::matmul(conv, bind("enc.dyn.lin.w")), bind("enc.dyn.lin.b"));
}

Var encode_static(Binder& bind, Var raw, double ema_decay) {
  if (raw.rows() < 1) throw ValidationError("static encoder needs at least one clip");
  require_finite(raw, "encode_static");
  Var u = ag::add_row(ag::matmul(raw, bind("enc.sta.in.w")), bind("enc.sta.in.b"));
  Var gate = ag::tanh(ag::matmul(u, bind("enc.sta.gate.w")));
  return ag::add(u, ag::hadamard(gate, ag::ema_rows(u, ema_decay)));
}

Mat pool_tokens(const std::vector<std::vector<int>>& token_ids, const Mat& table) {
  Mat pooled = Mat::Zero(static_cast<Eigen::Index>(token_ids.size()), table.cols());
  for (std::size_t q = 0; q < token_ids.size(); ++q) {
    const auto& toks = token_ids[q];
    if (toks.empty()) throw ValidationError("query " + std::to_string(q) + " has no tokens");
    for (int t : toks) {
      if (t < 0 || t >= table.rows()) throw ValidationError("token id " + std::to_string(t) + " outside vocabulary");
      pooled.row(static_cast<Eigen::Index>(q)) += table.row(t);
    }
    pooled.row(static_cast<Eigen::Index>(q)) /= static_cast<double>(toks.size());
  }
  return pooled;
}

Var encode_queries(Binder& bind, Var pooled) {
  require_finite(pooled, "encode_queries");
  return ag::add_row(ag::matmul(pooled, bind("enc.qry.lin.w")), bind("enc.qry.lin.b"));
}

}  // namespace sdgan::encoders
