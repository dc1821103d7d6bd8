// SPDX-License-Identifier: Apache-2.0
//
// R@h,IoU@u and mIoU over ranked moment predictions, in the time domain.

#pragma once

#include "sdgan/data_model.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace sdgan::eval {

inline constexpr std::array<int, 2> kRanks{1, 5};
inline constexpr std::array<double, 3> kThresholds{0.3, 0.5, 0.7};

struct ScoredMoment {
  Moment moment;
  double score = 0.0;
};

struct QueryPrediction {
  std::string query_id;
  std::vector<ScoredMoment> ranked;  // best first
};

struct MetricReport {
  /// recall[h][u] in percent, indexed like kRanks x kThresholds.
  std::array<std::array<double, kThresholds.size()>, kRanks.size()> recall{};
  double miou = 0.0;
  std::size_t num_queries = 0;

  [[nodiscard]] double at(int rank, double threshold) const;
  /// Throws std::logic_error if either monotonicity chain is broken.
  void check_monotone() const;
};

/// Every dataset query is scored; a query without predictions counts as a
/// miss with IoU 0 (and a warning). Hits use IoU >= u.
MetricReport compute_metrics(const std::vector<QueryPrediction>& predictions, const GroundingDataset& truth);

/// "R@1,IoU@0.3" style column names followed by mIoU and queries.
std::string report_csv(const MetricReport& r);
std::string report_table(const MetricReport& r);

/// One JSON object per line: {"query_id", "proposals": [{"start","end","score"}]}.
void write_predictions(const std::vector<QueryPrediction>& preds, const std::filesystem::path& path);
std::vector<QueryPrediction> read_predictions(const std::filesystem::path& path);

}  // namespace sdgan::eval
