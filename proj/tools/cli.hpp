// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 invalid input or usage,
// 2 runtime failure (including a missed --min-miou gate).

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitFailure = 2;

/// `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdgan::cli
