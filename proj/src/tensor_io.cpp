// SPDX-License-Identifier: Apache-2.0

#include "sdgan/tensor_io.hpp"

#include "sdgan/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace sdgan {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'D', 'G', 'F'};

static_assert(std::endian::native == std::endian::little, "blob I/O assumes a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void write_blob(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kBlobVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = static_cast<float>(m(r, c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Eigen::MatrixXd read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open blob " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ValidationError(path.string() + ": bad magic");
  const std::uint32_t version = get_u32(in);
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  if (!in) throw ValidationError(path.string() + ": truncated header");
  if (version != kBlobVersion) throw ValidationError(path.string() + ": unsupported version " + std::to_string(version));
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw ValidationError(path.string() + ": truncated payload");
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r) * cols + c];
  }
  return m;
}

}  // namespace sdgan
