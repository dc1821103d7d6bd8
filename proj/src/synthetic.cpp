// SPDX-License-Identifier: Apache-2.0

#include "sdgan/synthetic.hpp"

#include "sdgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>

namespace sdgan::synth {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  if (stddev == 0.0) return MatrixXd::Zero(rows, cols);
  std::normal_distribution<double> dist(0.0, stddev);
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

void check(const SynthConfig& cfg, int num_videos, int queries_per_video) {
  if (num_videos < 1) throw ValidationError("need at least one video");
  if (queries_per_video < 1) throw ValidationError("need at least one query per video");
  if (cfg.num_clips < 2) throw ValidationError("need at least two clips per video");
  if (cfg.raw_dim < 1 || cfg.embed_dim < 1 || cfg.vocab < 1) throw ValidationError("dimensions must be positive");
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens || cfg.max_tokens > cfg.vocab) {
    throw ValidationError("invalid token count range");
  }
  if (!(cfg.signal_strength >= 0.0) || !(cfg.noise_std >= 0.0)) throw ValidationError("signal and noise must be >= 0");
  if (cfg.static_stride < 1) throw ValidationError("static stride must be positive");
  const long spans = static_cast<long>(cfg.num_clips) * (cfg.num_clips + 1) / 2;
  if (queries_per_video > spans) {
    throw ValidationError("queries per video " + std::to_string(queries_per_video) + " exceeds " +
                          std::to_string(spans) + " distinct spans");
  }
}

// Removes the components along earlier patterns of the same video so that
// overlapping spans stay separable, then renormalizes. Falls back to the raw
// pattern once the space is exhausted.
VectorXd separated(const VectorXd& p, std::vector<VectorXd>& basis) {
  VectorXd r = p;
  for (const VectorXd& b : basis) r -= b.dot(r) * b;
  const double n = r.norm();
  if (n < 1e-8) return p;
  r /= n;
  basis.push_back(r);
  return r;
}

}  // namespace

VectorXd pattern(const MatrixXd& projection, const MatrixXd& embeddings, const std::vector<int>& tokens) {
  VectorXd mean = VectorXd::Zero(embeddings.cols());
  for (int t : tokens) mean += embeddings.row(t).transpose();
  mean /= static_cast<double>(tokens.size());
  VectorXd p = projection * mean;
  const double n = p.norm();
  return n > 0.0 ? VectorXd(p / n) : p;
}

SyntheticCorpus generate(const SynthConfig& cfg, int num_videos, int queries_per_video) {
  check(cfg, num_videos, queries_per_video);
  SyntheticCorpus out;
  std::mt19937_64 global = stream_rng(cfg.seed, 0);
  out.corpus.embeddings = gaussian(global, cfg.vocab, cfg.embed_dim, 1.0 / std::sqrt(cfg.embed_dim));
  out.dynamic_projection = gaussian(global, cfg.raw_dim, cfg.embed_dim, 1.0 / std::sqrt(cfg.embed_dim));
  out.static_projection = gaussian(global, cfg.raw_dim, cfg.embed_dim, 1.0 / std::sqrt(cfg.embed_dim));

  const int T = cfg.num_clips;
  for (int v = 0; v < num_videos; ++v) {
    std::mt19937_64 rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(v) + 1);
    VideoRecord rec;
    rec.video_id = "vid" + std::to_string(v);
    rec.num_clips = T;
    const double clip_seconds = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
    rec.duration = clip_seconds * T;

    MatrixXd planted_dyn = MatrixXd::Zero(T, cfg.raw_dim);
    MatrixXd planted_sta = MatrixXd::Zero(T, cfg.raw_dim);
    std::set<std::pair<int, int>> used;
    std::vector<VectorXd> dyn_basis;
    std::vector<VectorXd> sta_basis;
    std::vector<VectorXd> dyn_planted;
    std::vector<ClipSpan> spans;
    std::uniform_int_distribution<int> clip(1, T);
    std::uniform_int_distribution<int> ntok(cfg.min_tokens, cfg.max_tokens);
    std::uniform_int_distribution<int> token(0, cfg.vocab - 1);
    for (int q = 0; q < queries_per_video; ++q) {
      int a = 0;
      int b = 0;
      do {
        a = clip(rng);
        b = clip(rng);
        if (a > b) std::swap(a, b);
      } while (!used.insert({a, b}).second);
      const ClipSpan span(a, b);

      std::set<int> bag;
      const int want = ntok(rng);
      while (static_cast<int>(bag.size()) < want) bag.insert(token(rng));
      std::vector<int> tokens(bag.begin(), bag.end());
      std::shuffle(tokens.begin(), tokens.end(), rng);

      const VectorXd pd = separated(pattern(out.dynamic_projection, out.corpus.embeddings, tokens), dyn_basis);
      const VectorXd ps = separated(pattern(out.static_projection, out.corpus.embeddings, tokens), sta_basis);
      dyn_planted.push_back(pd);
      for (int c = span.start; c <= span.end; ++c) {
        planted_dyn.row(c - 1) += cfg.signal_strength * pd.transpose();
        planted_sta.row(c - 1) += cfg.signal_strength * ps.transpose();
      }
      QueryRecord qr;
      qr.query_id = rec.video_id + "_q" + std::to_string(q);
      qr.tokens = std::move(tokens);
      qr.moment = clip_span_to_moment(span, rec.duration, T);
      rec.queries.push_back(std::move(qr));
      spans.push_back(span);
    }

    VideoFeatures f;
    f.dynamic = planted_dyn + gaussian(rng, T, cfg.raw_dim, cfg.noise_std);
    const MatrixXd sampled = planted_sta + gaussian(rng, T, cfg.raw_dim, cfg.noise_std);
    f.stat.resize(T, cfg.raw_dim);
    for (int c = 0; c < T; ++c) f.stat.row(c) = sampled.row((c / cfg.static_stride) * cfg.static_stride);

    out.corpus.dataset.videos.push_back(std::move(rec));
    out.corpus.features.push_back(std::move(f));
    out.spans.push_back(std::move(spans));
    out.dynamic_patterns.push_back(std::move(dyn_planted));
  }
  return out;
}

}  // namespace sdgan::synth
