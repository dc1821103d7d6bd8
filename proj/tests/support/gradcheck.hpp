// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient checks over named blocks. Inputs under test are
// placed in the ParamSet next to real parameters so one code path covers both.

#pragma once

#include "sdgan/autograd.hpp"
#include "sdgan/params.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;

/// Builds a scalar from blocks fetched through the binder.
using Objective = std::function<sdgan::ag::Var(sdgan::Binder&)>;

struct BlockResult {
  std::string name;
  double rel_error = 0.0;
  int entries = 0;
};

/// ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||, 1e-10),
/// restricted to at most `max_entries` randomly chosen entries per block.
std::vector<BlockResult> check(const sdgan::ParamSet& blocks, const Objective& f, std::mt19937_64& rng,
                               int max_entries = 40, const std::vector<std::string>& only = {});

/// Reduces any matrix to a scalar with fixed random weights so that every
/// output entry contributes a distinct upstream gradient.
sdgan::ag::Var project(sdgan::ag::Var out, const sdgan::ag::Mat& weights);

}  // namespace gradcheck
