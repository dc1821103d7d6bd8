// SPDX-License-Identifier: Apache-2.0

#include "sdgan/model.hpp"

#include "sdgan/encoders.hpp"
#include "sdgan/errors.hpp"
#include "sdgan/fusion.hpp"

#include <random>

namespace sdgan {

using ag::Mat;
using ag::Var;
using losses::Branch;

VideoInput make_input(const VideoRecord& video, const VideoFeatures& features, const Mat& embeddings) {
  VideoInput in;
  in.dynamic = features.dynamic;
  in.stat = features.stat;
  std::vector<std::vector<int>> tokens;
  for (const auto& q : video.queries) {
    tokens.push_back(q.tokens);
    in.truth.push_back(moment_to_clip_span(q.moment, video.duration, video.num_clips));
    in.positives.push_back(contained_clip_span(q.moment, video.duration, video.num_clips));
  }
  in.pooled_queries = encoders::pool_tokens(tokens, embeddings);
  return in;
}

ParamSet init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamSet p;
  encoders::init_params(p, {cfg.raw_dim, cfg.embed_dim, cfg.hidden, cfg.ema_decay}, rng);
  fusion::init_params(p, cfg.hidden, rng);
  dsgn::init_params(p, cfg.hidden, rng);
  proposals::init_params(p, "prop.fine", cfg.hidden, rng);
  proposals::init_params(p, "prop.coarse", cfg.hidden, rng);
  return p;
}

Mat combine_scores(const Mat& dynamic, const Mat& stat, const losses::LossWeights& w) {
  const double total = w.dynamic + w.stat;
  if (total <= 0.0) return 0.5 * (dynamic + stat);
  return (w.dynamic / total) * dynamic + (w.stat / total) * stat;
}

namespace {

struct BranchScores {
  Var dynamic;
  Var stat;
};

BranchScores branch_scores(Binder& bind, Var f_dyn, Var f_sta, Var queries, const std::string& prefix) {
  return {proposals::score_map(proposals::build_map(bind, f_dyn, prefix), queries),
          proposals::score_map(proposals::build_map(bind, f_sta, prefix), queries)};
}

}  // namespace

ForwardResult forward(Binder& bind, const ModelConfig& cfg, const VideoInput& input, Mode mode, Branch branch) {
  ag::Tape& tape = bind.tape();
  const auto t = static_cast<int>(input.dynamic.rows());
  if (t != cfg.clips || input.stat.rows() != t) {
    throw ValidationError("video has " + std::to_string(t) + " clips but the model expects " + std::to_string(cfg.clips));
  }
  if (input.dynamic.cols() != cfg.raw_dim || input.stat.cols() != cfg.raw_dim) {
    throw ValidationError("feature width does not match model raw_dim");
  }
  if (input.pooled_queries.cols() != cfg.embed_dim) throw ValidationError("embedding width does not match model embed_dim");
  const auto n = static_cast<int>(input.pooled_queries.rows());
  if (n == 0) throw ValidationError("video has no queries");

  Var raw_dyn = tape.constant(input.dynamic);
  Var raw_sta = tape.constant(input.stat);
  Var enc_dyn = encoders::encode_dynamic(bind, raw_dyn);
  Var enc_sta = encoders::encode_static(bind, raw_sta, cfg.ema_decay);
  Var enc_qry = encoders::encode_queries(bind, tape.constant(input.pooled_queries));
  const fusion::FusedStreams fused = fusion::fuse(bind, enc_dyn, enc_sta, enc_qry, cfg.fusion);

  ForwardResult out;
  Var g_dyn = dsgn::graph_forward(fused.dynamic, cfg.graph, nullptr, &out.graphs_dynamic);
  Var g_sta = dsgn::graph_forward(fused.stat, cfg.graph, nullptr, &out.graphs_static);

  const bool fine = mode == Mode::kInfer || branch == Branch::kFine;
  const auto valid = proposals::valid_cells(fine ? t : t / cfg.window);
  BranchScores scores;
  if (fine) {
    scores = branch_scores(bind, g_dyn, g_sta, fused.query, "prop.fine");
    out.fine_dynamic = {t, scores.dynamic.value()};
    out.fine_static = {t, scores.stat.value()};
    out.fine_combined = {t, combine_scores(scores.dynamic.value(), scores.stat.value(), cfg.weights)};
  }
  if (mode == Mode::kInfer) return out;

  const GranularityConfig gran(cfg.clips, cfg.window);
  Var coarse_dyn = proposals::aggregate_coarse(g_dyn, cfg.window);
  Var coarse_sta = proposals::aggregate_coarse(g_sta, cfg.window);
  if (!fine) scores = branch_scores(bind, coarse_dyn, coarse_sta, fused.query, "prop.coarse");

  losses::LossTerms terms;
  const bool coarse_epoch = branch == Branch::kCoarse;
  if (coarse_epoch ? cfg.qccl_in_coarse : cfg.qccl_in_fine) {
    const Var q_dyn = dsgn::qccl_loss(fused.query, fused.dynamic, bind("qccl.w.dyn"), input.positives, cfg.qccl_expectation);
    const Var q_sta = dsgn::qccl_loss(fused.query, fused.stat, bind("qccl.w.sta"), input.positives, cfg.qccl_expectation);
    terms.query_clip = ag::scale(ag::add(q_dyn, q_sta), 0.5);
  }
  if (coarse_epoch ? cfg.pna_in_coarse : cfg.pna_in_fine) {
    terms.pna_coarse = losses::pna_loss(coarse_dyn, coarse_sta, cfg.weights.tau_pna);
    terms.pna_fine = losses::pna_loss(g_dyn, g_sta, cfg.weights.tau_pna);
  }

  const int length = fine ? t : gran.coarse_clips();
  std::vector<ClipSpan> truth = input.truth;
  if (!fine) {
    for (auto& s : truth) s = fine_to_coarse(s, gran);
  }
  std::optional<losses::IoURescale> rescale;
  if (cfg.iou_rescale) rescale = losses::IoURescale{cfg.iou_rescale_lo, cfg.iou_rescale_hi};
  const Mat targets = losses::iou_targets(length, truth, rescale);
  std::vector<int> truth_rows;
  {
    std::vector<int> position(static_cast<std::size_t>(length) * length, -1);
    for (std::size_t i = 0; i < valid.size(); ++i) position[static_cast<std::size_t>(valid[i])] = static_cast<int>(i);
    for (const auto& s : truth) truth_rows.push_back(position[static_cast<std::size_t>(proposals::cell_index(length, s.start, s.end))]);
  }
  Var valid_dyn = ag::gather_rows(scores.dynamic, valid);
  Var valid_sta = ag::gather_rows(scores.stat, valid);
  terms.iou_dyn = losses::iou_loss(valid_dyn, targets);
  terms.iou_sta = losses::iou_loss(valid_sta, targets);
  terms.contra_dyn = losses::contra_loss(valid_dyn, truth_rows, cfg.weights.tau_contra);
  terms.contra_sta = losses::contra_loss(valid_sta, truth_rows, cfg.weights.tau_contra);

  out.total = losses::total_loss(tape, terms, cfg.weights);
  out.loss = losses::breakdown(terms, out.total);
  return out;
}

}  // namespace sdgan
