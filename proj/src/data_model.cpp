// SPDX-License-Identifier: Apache-2.0

#include "sdgan/data_model.hpp"

#include "sdgan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

namespace sdgan {

namespace {

// Snaps values within 1e-9 of an integer so that boundaries such as
// 0.6 / 0.2 land on the clip they name.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

void check_clip_args(double duration, int num_clips) {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be positive and finite");
  if (num_clips < 1) throw ValidationError("clip count must be >= 1");
}

}  // namespace

void log_warning(const std::string& message) {
  static std::mutex mu;
  static std::set<std::string> seen;
  std::lock_guard lock(mu);
  if (seen.insert(message).second) std::cerr << "warning: " << message << '\n';
}

Moment::Moment(double start_sec, double end_sec) : start(start_sec), end(end_sec) {
  if (!std::isfinite(start) || !std::isfinite(end)) throw ValidationError("moment endpoints must be finite");
  if (start > end) {
    std::ostringstream os;
    os << "moment start " << start << " exceeds end " << end;
    throw ValidationError(os.str());
  }
}

ClipSpan::ClipSpan(int start_clip, int end_clip) : start(start_clip), end(end_clip) {
  if (start < 1 || start > end) {
    throw ValidationError("invalid clip span [" + std::to_string(start) + ", " + std::to_string(end) + "]");
  }
}

GranularityConfig::GranularityConfig(int fine_clips, int window) : fine_(fine_clips), window_(window) {
  if (fine_ < 1 || window_ < 1) throw ValidationError("clip count and window must be positive");
  if (fine_ % window_ != 0) {
    throw ValidationError("window " + std::to_string(window_) + " does not divide clip count " + std::to_string(fine_));
  }
}

std::size_t GroundingDataset::num_queries() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.queries.size();
  return n;
}

ClipSpan moment_to_clip_span(const Moment& m, double duration, int num_clips) {
  check_clip_args(duration, num_clips);
  if (m.start < 0.0 || m.end > duration) throw ValidationError("moment lies outside the video");
  const double scale = num_clips / duration;
  const double s = snap(m.start * scale);
  const double e = snap(m.end * scale);
  const int first = std::min(num_clips, static_cast<int>(std::floor(s)) + 1);
  if (m.start == m.end) return {first, first};
  const int last = std::clamp(static_cast<int>(std::ceil(e)), first, num_clips);
  return {first, last};
}

ClipSpan contained_clip_span(const Moment& m, double duration, int num_clips) {
  check_clip_args(duration, num_clips);
  const double scale = num_clips / duration;
  const int first = static_cast<int>(std::ceil(snap(m.start * scale))) + 1;
  const int last = std::min(num_clips, static_cast<int>(std::floor(snap(m.end * scale))));
  if (first <= last) return {first, last};
  const double mid = 0.5 * (m.start + m.end);
  const int c = std::clamp(static_cast<int>(std::floor(snap(mid * scale))) + 1, 1, num_clips);
  return {c, c};
}

Moment clip_span_to_moment(const ClipSpan& span, double duration, int num_clips) {
  check_clip_args(duration, num_clips);
  if (span.end > num_clips) throw ValidationError("clip span exceeds clip count");
  const double w = duration / num_clips;
  return {(span.start - 1) * w, span.end == num_clips ? duration : span.end * w};
}

double iou(const Moment& a, const Moment& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

double iou(const ClipSpan& a, const ClipSpan& b) {
  const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start) + 1);
  const int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / uni;
}

ClipSpan fine_to_coarse(const ClipSpan& span, const GranularityConfig& cfg) {
  if (span.end > cfg.fine_clips()) throw ValidationError("span exceeds fine clip count");
  const int n = cfg.window();
  return {(span.start + n - 1) / n, (span.end + n - 1) / n};
}

void validate(const VideoRecord& video) {
  const std::string where = "video '" + video.video_id + "'";
  if (video.video_id.empty()) throw ValidationError("video_id must not be empty");
  if (!(video.duration > 0.0) || !std::isfinite(video.duration)) throw ValidationError(where + ": duration must be positive");
  if (video.num_clips < 2) throw ValidationError(where + ": num_clips must be >= 2");
  std::set<std::string> seen;
  for (const auto& q : video.queries) {
    const std::string qwhere = where + " query '" + q.query_id + "'";
    if (!seen.insert(q.query_id).second) throw ValidationError(qwhere + ": duplicate query_id");
    if (q.tokens.empty()) throw ValidationError(qwhere + ": empty token list");
    if (std::any_of(q.tokens.begin(), q.tokens.end(), [](int t) { return t < 0; })) {
      throw ValidationError(qwhere + ": negative token id");
    }
    const Moment& m = q.moment;
    if (!std::isfinite(m.start) || !std::isfinite(m.end) || m.start > m.end) {
      throw ValidationError(qwhere + ": end precedes start");
    }
    if (m.start < 0.0 || m.end > video.duration) throw ValidationError(qwhere + ": moment outside [0, duration]");
  }
}

GroundingDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open annotation file " + path.string());
  GroundingDataset ds;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  const std::string src = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    VideoRecord v;
    try {
      const auto j = nlohmann::json::parse(line);
      v.video_id = j.at("video_id").get<std::string>();
      v.duration = j.at("duration").get<double>();
      v.num_clips = j.at("num_clips").get<int>();
      for (const auto& jq : j.at("queries")) {
        QueryRecord q;
        q.query_id = jq.at("query_id").get<std::string>();
        q.tokens = jq.at("tokens").get<std::vector<int>>();
        // Bypass the Moment constructor so validate() can name the query.
        q.moment.start = jq.at("start").get<double>();
        q.moment.end = jq.at("end").get<double>();
        v.queries.push_back(std::move(q));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(src, lineno, e.what());
    }
    try {
      validate(v);
    } catch (const ValidationError& e) {
      throw ValidationError(src + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!ids.insert(v.video_id).second) throw ParseError(src, lineno, "duplicate video_id '" + v.video_id + "'");
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

void save_dataset(const GroundingDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& v : dataset.videos) {
    nlohmann::json j;
    j["video_id"] = v.video_id;
    j["duration"] = v.duration;
    j["num_clips"] = v.num_clips;
    j["queries"] = nlohmann::json::array();
    for (const auto& q : v.queries) {
      j["queries"].push_back({{"query_id", q.query_id}, {"tokens", q.tokens}, {"start", q.moment.start}, {"end", q.moment.end}});
    }
    out << j.dump() << '\n';
  }
}

}  // namespace sdgan
