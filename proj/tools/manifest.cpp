// SPDX-License-Identifier: Apache-2.0

#include "manifest.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#ifndef SDGAN_VERSION
#define SDGAN_VERSION "unknown"
#endif

namespace sdgan::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest::RunManifest(fs::path path, std::string command, std::vector<std::string> argv)
    : path_(std::move(path)), command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::start() {
  started_ = utc_now();
  write("running", -1, {});
}

void RunManifest::finish(int exit_code, const std::string& error) {
  finished_ = utc_now();
  write(exit_code == 0 ? "ok" : "failed", exit_code, error);
}

void RunManifest::write(const std::string& status, int exit_code, const std::string& error) const {
  nlohmann::json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["version"] = SDGAN_VERSION;
  j["seed"] = seed_;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_) cfg[k] = v;
  j["config"] = cfg;
  j["artifacts"] = artifacts_;
  j["started_at"] = started_;
  j["finished_at"] = finished_.empty() ? nlohmann::json(nullptr) : nlohmann::json(finished_);
  j["status"] = status;
  if (exit_code >= 0) j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;

  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  const fs::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path_);
}

}  // namespace sdgan::cli
