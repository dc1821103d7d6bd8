// SPDX-License-Identifier: Apache-2.0
//
// Multimodal fusion over the stacked [dynamic; static; query] rows:
//   F~ = F + LN1(F)
//   F^ = LN2(F~ + MLP(F~)),   MLP = Linear(D, 4D) -> GELU -> Linear(4D, D)
// With literal_residual_norm off, the first step becomes the usual pre-norm
// form F^ = LN2(F + MLP(LN1(F))).

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/params.hpp"

#include <random>

namespace sdgan::fusion {

inline constexpr double kLayerNormEps = 1e-5;

struct FusionOptions {
  bool literal_residual_norm = true;
};

struct FusedStreams {
  ag::Var dynamic;  // T x D
  ag::Var stat;     // T x D
  ag::Var query;    // N x D (N may be 0)
};

void init_params(ParamSet& params, int hidden, std::mt19937_64& rng);

/// Learned-affine row-wise LayerNorm using blocks <prefix>.g and <prefix>.b.
ag::Var layer_norm(Binder& bind, ag::Var x, const std::string& prefix);

FusedStreams fuse(Binder& bind, ag::Var dynamic, ag::Var stat, ag::Var query, const FusionOptions& opts = {});

}  // namespace sdgan::fusion
