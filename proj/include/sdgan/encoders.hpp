// SPDX-License-Identifier: Apache-2.0
//
// Per-stream encoders to the shared width D.
//
//   dynamic: width-3 same-padded temporal convolution, then a linear layer
//   static:  u = x W_in + b;  y_t = u_t + tanh(u_t G) * ema(u)_t   (causal)
//   text:    mean of frozen token embeddings, then a linear layer

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/params.hpp"

#include <random>
#include <vector>

namespace sdgan::encoders {

inline constexpr int kConvWidth = 3;

struct EncoderDims {
  int raw_dim = 32;
  int embed_dim = 32;
  int hidden = 32;
  double ema_decay = 0.5;
};

/// Adds enc.dyn.*, enc.sta.* and enc.qry.* blocks.
void init_params(ParamSet& params, const EncoderDims& dims, std::mt19937_64& rng);

/// raw: T x D_raw, T >= kConvWidth. Returns T x D.
ag::Var encode_dynamic(Binder& bind, ag::Var raw);
/// raw: T x D_raw. Returns T x D; row t depends only on rows <= t.
ag::Var encode_static(Binder& bind, ag::Var raw, double ema_decay);
/// Mean-pools each token list over the embedding table (N x E, no gradient).
ag::Mat pool_tokens(const std::vector<std::vector<int>>& token_ids, const ag::Mat& table);
/// pooled: N x E from pool_tokens. Returns N x D.
ag::Var encode_queries(Binder& bind, ag::Var pooled);

}  // namespace sdgan::encoders
