// SPDX-License-Identifier: Apache-2.0
//
// "SDGF" tensor blobs: 16-byte little-endian header (magic, version, rows,
// cols as u32) followed by rows*cols row-major float32 values.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

namespace sdgan {

inline constexpr std::uint32_t kBlobVersion = 1;

void write_blob(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_blob(const std::filesystem::path& path);

}  // namespace sdgan
