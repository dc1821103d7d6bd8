// SPDX-License-Identifier: Apache-2.0
//
// Annotation schema, moment arithmetic and coarse/fine clip index mapping.
// Clip indices are 1-based everywhere in memory; files store 0-based.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sdgan {

/// A time interval in seconds.
struct Moment {
  double start = 0.0;
  double end = 0.0;

  Moment() = default;
  /// Throws ValidationError unless both finite and start <= end.
  Moment(double start_sec, double end_sec);

  [[nodiscard]] double length() const { return end - start; }
  bool operator==(const Moment&) const = default;
};

/// Inclusive range of clips [start, end], 1-based.
struct ClipSpan {
  int start = 1;
  int end = 1;

  ClipSpan() = default;
  /// Throws ValidationError unless 1 <= start <= end.
  ClipSpan(int start_clip, int end_clip);

  [[nodiscard]] int length() const { return end - start + 1; }
  bool operator==(const ClipSpan&) const = default;
};

/// Fine/coarse clip counts with t * n == T exactly.
class GranularityConfig {
 public:
  /// Rejects window sizes that do not divide `fine_clips`.
  GranularityConfig(int fine_clips, int window);

  [[nodiscard]] int fine_clips() const { return fine_; }
  [[nodiscard]] int window() const { return window_; }
  [[nodiscard]] int coarse_clips() const { return fine_ / window_; }

 private:
  int fine_;
  int window_;
};

struct QueryRecord {
  std::string query_id;
  std::vector<int> tokens;
  Moment moment;
};

struct VideoRecord {
  std::string video_id;
  double duration = 0.0;
  int num_clips = 0;
  std::vector<QueryRecord> queries;
};

struct GroundingDataset {
  std::vector<VideoRecord> videos;

  [[nodiscard]] std::size_t num_queries() const;
};

// ---------------------------------------------------------------------------
// Moment arithmetic
// ---------------------------------------------------------------------------

/// Smallest span covering `m`, clip i spanning [(i-1) d/T, i d/T).
/// A zero-length moment maps to the single clip containing that instant.
ClipSpan moment_to_clip_span(const Moment& m, double duration, int num_clips);

/// Clips whose whole extent lies inside `m`. When no clip is fully inside,
/// falls back to the clip containing the moment's midpoint so that every
/// query keeps at least one positive clip.
ClipSpan contained_clip_span(const Moment& m, double duration, int num_clips);

/// Time extent [(start-1) d/T, end d/T] of a span.
Moment clip_span_to_moment(const ClipSpan& span, double duration, int num_clips);

/// Temporal IoU. Two identical zero-length moments score 1, distinct ones 0.
double iou(const Moment& a, const Moment& b);
/// Clip-count IoU with inclusive lengths.
double iou(const ClipSpan& a, const ClipSpan& b);

/// ceil(index / n) on both endpoints.
ClipSpan fine_to_coarse(const ClipSpan& span, const GranularityConfig& cfg);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Checks every VideoRecord invariant; the message names the offending
/// video_id / query_id.
void validate(const VideoRecord& video);

/// Reads the JSON-lines annotation file. Throws ParseError (with line number)
/// on malformed lines and ValidationError on invariant violations.
GroundingDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const GroundingDataset& dataset, const std::filesystem::path& path);

}  // namespace sdgan
