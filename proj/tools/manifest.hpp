// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sdgan::cli {

/// Provenance record for one command. Written when the command starts and
/// rewritten with the outcome when it ends; both writes go through a
/// temporary file and a rename.
class RunManifest {
 public:
  RunManifest(std::filesystem::path path, std::string command, std::vector<std::string> argv);

  void set_config(std::vector<std::pair<std::string, std::string>> kv) { config_ = std::move(kv); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_artifact(const std::filesystem::path& p) { artifacts_.push_back(p.string()); }

  void start();
  void finish(int exit_code, const std::string& error = {});

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  void write(const std::string& status, int exit_code, const std::string& error) const;

  std::filesystem::path path_;
  std::string command_;
  std::vector<std::string> argv_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> artifacts_;
  std::string started_;
  std::string finished_;
};

}  // namespace sdgan::cli
