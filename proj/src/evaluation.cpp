// SPDX-License-Identifier: Apache-2.0

#include "sdgan/evaluation.hpp"

#include "sdgan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sdgan::eval {

double MetricReport::at(int rank, double threshold) const {
  for (std::size_t h = 0; h < kRanks.size(); ++h) {
    for (std::size_t u = 0; u < kThresholds.size(); ++u) {
      if (kRanks[h] == rank && kThresholds[u] == threshold) return recall[h][u];
    }
  }
  throw std::out_of_range("no such metric R@" + std::to_string(rank));
}

void MetricReport::check_monotone() const {
  for (std::size_t u = 0; u < kThresholds.size(); ++u) {
    if (recall[0][u] > recall[1][u]) throw std::logic_error("R@1 exceeds R@5");
  }
  for (std::size_t h = 0; h < kRanks.size(); ++h) {
    for (std::size_t u = 1; u < kThresholds.size(); ++u) {
      if (recall[h][u] > recall[h][u - 1]) throw std::logic_error("recall increases with the IoU threshold");
    }
  }
}

MetricReport compute_metrics(const std::vector<QueryPrediction>& predictions, const GroundingDataset& truth) {
  std::map<std::string, const QueryPrediction*> by_id;
  for (const auto& p : predictions) by_id[p.query_id] = &p;

  MetricReport r;
  std::array<std::array<std::size_t, kThresholds.size()>, kRanks.size()> hits{};
  // Summed in sorted order so the result does not depend on query order.
  std::vector<double> top1;
  for (const auto& v : truth.videos) {
    for (const auto& q : v.queries) {
      ++r.num_queries;
      auto it = by_id.find(q.query_id);
      if (it == by_id.end() || it->second->ranked.empty()) {
        log_warning("no prediction for query '" + q.query_id + "'");
        continue;
      }
      const auto& ranked = it->second->ranked;
      top1.push_back(iou(ranked.front().moment, q.moment));
      for (std::size_t h = 0; h < kRanks.size(); ++h) {
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(kRanks[h]), ranked.size());
        double best = 0.0;
        for (std::size_t i = 0; i < top; ++i) best = std::max(best, iou(ranked[i].moment, q.moment));
        for (std::size_t u = 0; u < kThresholds.size(); ++u) {
          if (best >= kThresholds[u]) ++hits[h][u];
        }
      }
    }
  }
  if (r.num_queries == 0) return r;
  const auto n = static_cast<double>(r.num_queries);
  for (std::size_t h = 0; h < kRanks.size(); ++h) {
    for (std::size_t u = 0; u < kThresholds.size(); ++u) r.recall[h][u] = 100.0 * static_cast<double>(hits[h][u]) / n;
  }
  std::sort(top1.begin(), top1.end());
  r.miou = 100.0 * std::accumulate(top1.begin(), top1.end(), 0.0) / n;
  r.check_monotone();
  return r;
}

namespace {

std::string metric_name(std::size_t h, std::size_t u) {
  std::ostringstream os;
  os << "R@" << kRanks[h] << ", IoU@" << kThresholds[u];
  return os.str();
}

}  // namespace

std::string report_csv(const MetricReport& r) {
  std::ostringstream head;
  std::ostringstream row;
  row << std::fixed << std::setprecision(2);
  for (std::size_t h = 0; h < kRanks.size(); ++h) {
    for (std::size_t u = 0; u < kThresholds.size(); ++u) {
      head << '"' << metric_name(h, u) << "\",";
      row << r.recall[h][u] << ',';
    }
  }
  head << "mIoU,queries\n";
  row << r.miou << ',' << r.num_queries << '\n';
  return head.str() + row.str();
}

std::string report_table(const MetricReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Metric" << std::right << std::setw(10) << "Value" << '\n';
  os << std::string(26, '-') << '\n';
  os << std::fixed << std::setprecision(2);
  for (std::size_t h = 0; h < kRanks.size(); ++h) {
    for (std::size_t u = 0; u < kThresholds.size(); ++u) {
      os << std::left << std::setw(16) << metric_name(h, u) << std::right << std::setw(10) << r.recall[h][u] << '\n';
    }
  }
  os << std::left << std::setw(16) << "mIoU" << std::right << std::setw(10) << r.miou << '\n';
  os << std::left << std::setw(16) << "Queries" << std::right << std::setw(10) << r.num_queries << '\n';
  return os.str();
}

void write_predictions(const std::vector<QueryPrediction>& preds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : preds) {
    nlohmann::json j;
    j["query_id"] = p.query_id;
    j["proposals"] = nlohmann::json::array();
    for (const auto& m : p.ranked) {
      j["proposals"].push_back({{"start", m.moment.start}, {"end", m.moment.end}, {"score", m.score}});
    }
    out << j.dump() << '\n';
  }
}

std::vector<QueryPrediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open predictions " + path.string());
  std::vector<QueryPrediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      QueryPrediction p;
      p.query_id = j.at("query_id").get<std::string>();
      for (const auto& jp : j.at("proposals")) {
        p.ranked.push_back({Moment(jp.at("start").get<double>(), jp.at("end").get<double>()), jp.at("score").get<double>()});
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

}  // namespace sdgan::eval
