// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "manifest.hpp"

#include "sdgan/config.hpp"
#include "sdgan/corpus.hpp"
#include "sdgan/errors.hpp"
#include "sdgan/evaluation.hpp"
#include "sdgan/model.hpp"
#include "sdgan/synthetic.hpp"
#include "sdgan/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <ostream>

namespace sdgan::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
  int videos = 20;
  int queries = 3;
  synth::SynthConfig synth;
  std::string out_dir;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string val;
  std::string out;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string pred;
  std::string report;
  std::optional<double> min_miou;
  std::optional<int> top_h;
};

struct GraphArgs {
  std::string checkpoint;
  std::string data;
  std::string video;
  std::string stream = "dynamic";
  int layer = 1;
  std::string out;
};

struct LossArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

KeyValues synth_kv(const GenerateArgs& g) {
  return {{"videos", std::to_string(g.videos)},
          {"queries_per_video", std::to_string(g.queries)},
          {"clips", std::to_string(g.synth.num_clips)},
          {"raw_dim", std::to_string(g.synth.raw_dim)},
          {"embed_dim", std::to_string(g.synth.embed_dim)},
          {"vocab", std::to_string(g.synth.vocab)},
          {"signal", std::to_string(g.synth.signal_strength)},
          {"noise", std::to_string(g.synth.noise_std)},
          {"static_stride", std::to_string(g.synth.static_stride)},
          {"seed", std::to_string(g.synth.seed)}};
}

void run_generate(const GenerateArgs& g, RunManifest& m, std::ostream& out) {
  m.set_config(synth_kv(g));
  m.set_seed(g.synth.seed);
  const auto sc = synth::generate(g.synth, g.videos, g.queries);
  save_corpus(sc.corpus, g.out_dir);
  m.add_artifact(fs::path(g.out_dir) / "annotations.jsonl");
  m.add_artifact(fs::path(g.out_dir) / "embeddings.sdgf");
  m.add_artifact(fs::path(g.out_dir) / "features");
  out << "wrote " << g.videos << " videos, " << sc.corpus.dataset.num_queries() << " queries to " << g.out_dir << '\n';
}

void run_train(const TrainArgs& a, RunManifest& m, std::ostream& out) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_config(a.config);
  apply_env_overrides(cfg);
  cfg.validate();
  m.set_config(to_kv(cfg));
  m.set_seed(cfg.seed);
  const Corpus data = load_corpus(a.data);
  std::optional<Corpus> val;
  if (!a.val.empty()) val = load_corpus(a.val);

  const fs::path dir = a.out;
  write_text(dir / "config.effective", format_kv(to_kv(cfg)));
  train::TrainOptions opts;
  opts.out_dir = dir;
  opts.validation = val ? &*val : nullptr;
  opts.on_epoch = [&out](const train::EpochLog& e) {
    out << "epoch " << std::setw(3) << e.epoch << ' ' << std::setw(6) << losses::to_string(e.branch)
        << "  total " << std::fixed << std::setprecision(5) << e.loss.total << '\n'
        << std::defaultfloat;
  };
  const auto result = train::train(data, cfg, opts);
  for (const char* p : {"config.effective", "loss_log.csv", "checkpoints/last", "checkpoints/best"}) m.add_artifact(dir / p);
  out << "best epoch " << result.best_epoch << " (mIoU " << std::fixed << std::setprecision(2) << result.best_miou
      << ")\n"
      << std::defaultfloat;
}

int run_eval(const EvalArgs& a, RunManifest& m, std::ostream& out, std::ostream& err) {
  const train::Checkpoint ck = train::load_checkpoint(a.checkpoint);
  m.set_config(to_kv(ck.config));
  m.set_seed(ck.config.seed);
  const Corpus data = load_corpus(a.data);
  const int top_h = a.top_h.value_or(ck.config.top_h);
  if (top_h < 1) throw ValidationError("--top-h must be >= 1");
  const auto preds = train::infer(ck.params, ck.config.model, data, top_h, ck.config.nms_iou);
  if (fs::path(a.pred).has_parent_path()) fs::create_directories(fs::path(a.pred).parent_path());
  eval::write_predictions(preds, a.pred);
  const auto report = eval::compute_metrics(preds, data.dataset);
  const fs::path report_path = a.report.empty() ? sibling(a.pred, ".report.csv") : fs::path(a.report);
  write_text(report_path, eval::report_csv(report));
  m.add_artifact(a.pred);
  m.add_artifact(report_path);
  out << eval::report_table(report);
  if (a.min_miou && report.miou < *a.min_miou) {
    err << "mIoU " << report.miou << " is below the required " << *a.min_miou << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

void run_inspect_graph(const GraphArgs& a, RunManifest& m, std::ostream& out) {
  const train::Checkpoint ck = train::load_checkpoint(a.checkpoint);
  m.set_config(to_kv(ck.config));
  m.set_seed(ck.config.seed);
  if (a.stream != "dynamic" && a.stream != "static") throw ValidationError("--stream must be 'dynamic' or 'static'");
  const Corpus data = load_corpus(a.data);
  if (data.dataset.videos.empty()) throw ValidationError("dataset has no videos");
  std::size_t idx = 0;
  if (!a.video.empty()) {
    const auto& vs = data.dataset.videos;
    const auto it = std::find_if(vs.begin(), vs.end(), [&](const VideoRecord& v) { return v.video_id == a.video; });
    if (it == vs.end()) throw ValidationError("no video '" + a.video + "' in " + a.data);
    idx = static_cast<std::size_t>(it - vs.begin());
  }
  const VideoInput input = make_input(data.dataset.videos[idx], data.features[idx], data.embeddings);
  ag::Tape tape;
  Binder bind(tape, ck.params, false);
  const ForwardResult fr = forward(bind, ck.config.model, input, Mode::kInfer);
  const auto& graphs = a.stream == "dynamic" ? fr.graphs_dynamic : fr.graphs_static;
  if (a.layer < 1 || a.layer > static_cast<int>(graphs.size())) {
    throw ValidationError("--layer must lie in [1, " + std::to_string(graphs.size()) + "]");
  }
  std::ostringstream csv;
  csv << "src,dst,cosine,phi\n" << std::setprecision(17);
  for (const auto& e : graphs[static_cast<std::size_t>(a.layer - 1)].edges) {
    csv << e.src - 1 << ',' << e.dst - 1 << ',' << e.cosine << ',' << e.weight << '\n';
  }
  write_text(a.out, csv.str());
  m.add_artifact(a.out);
  out << csv.str();
}

void run_losses_report(const LossArgs& a, RunManifest& m, std::ostream& out) {
  const train::Checkpoint ck = train::load_checkpoint(a.checkpoint);
  m.set_config(to_kv(ck.config));
  m.set_seed(ck.config.seed);
  const Corpus data = load_corpus(a.data);
  if (data.dataset.videos.empty()) throw ValidationError("dataset has no videos");
  std::vector<train::EpochLog> rows;
  for (const auto branch : {losses::Branch::kCoarse, losses::Branch::kFine}) {
    train::EpochLog row{ck.epoch, branch, {}};
    for (std::size_t i = 0; i < data.dataset.videos.size(); ++i) {
      ag::Tape tape;
      Binder bind(tape, ck.params, false);
      const VideoInput input = make_input(data.dataset.videos[i], data.features[i], data.embeddings);
      row.loss += forward(bind, ck.config.model, input, Mode::kTrain, branch).loss;
    }
    row.loss /= static_cast<double>(data.dataset.videos.size());
    rows.push_back(row);
  }
  const std::string csv = train::loss_log_csv(rows);
  write_text(a.out, csv);
  m.add_artifact(a.out);
  out << csv;
}

/// Runs `body` under a manifest, mapping exceptions to exit codes.
int guarded(RunManifest& m, std::ostream& err, const std::function<int()>& body) {
  int code = kExitOk;
  std::string error;
  try {
    m.start();
    code = body();
  } catch (const ValidationError& e) {
    code = kExitInvalid;
    error = e.what();
  } catch (const std::exception& e) {
    code = kExitFailure;
    error = e.what();
  }
  if (!error.empty()) err << "error: " << error << '\n';
  try {
    m.finish(code, error);
  } catch (const std::exception& e) {
    err << "error: could not finalize " << m.path() << ": " << e.what() << '\n';
    if (code == kExitOk) code = kExitFailure;
  }
  return code;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-stream graph temporal video grounding", "sdgan"};
  app.require_subcommand(1);

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  gen->add_option("--videos", g.videos, "Number of videos")->capture_default_str();
  gen->add_option("--queries-per-video", g.queries, "Queries per video")->capture_default_str();
  gen->add_option("--clips", g.synth.num_clips, "Clips per video")->capture_default_str();
  gen->add_option("--raw-dim", g.synth.raw_dim, "Raw feature width per stream")->capture_default_str();
  gen->add_option("--embed-dim", g.synth.embed_dim, "Token embedding width")->capture_default_str();
  gen->add_option("--vocab", g.synth.vocab, "Vocabulary size")->capture_default_str();
  gen->add_option("--signal", g.synth.signal_strength, "Planted signal strength")->capture_default_str();
  gen->add_option("--noise", g.synth.noise_std, "Noise standard deviation")->capture_default_str();
  gen->add_option("--seed", g.synth.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out-dir", g.out_dir, "Output directory")->required();

  TrainArgs t;
  auto* trn = app.add_subcommand("train", "Train a model");
  trn->add_option("--config", t.config, "key = value configuration file");
  trn->add_option("--data", t.data, "Training dataset directory")->required();
  trn->add_option("--val", t.val, "Validation dataset directory (best-checkpoint selection)");
  trn->add_option("--out", t.out, "Run output directory")->required();

  EvalArgs e;
  auto* evl = app.add_subcommand("eval", "Rank proposals and score them");
  evl->add_option("--checkpoint", e.checkpoint, "Checkpoint directory")->required();
  evl->add_option("--data", e.data, "Dataset directory")->required();
  evl->add_option("--pred", e.pred, "Prediction JSONL output")->required();
  evl->add_option("--report", e.report, "Metric CSV output (default <pred>.report.csv)");
  evl->add_option("--min-miou", e.min_miou, "Fail with exit code 2 below this mIoU");
  evl->add_option("--top-h", e.top_h, "Proposals kept per query");

  GraphArgs gr;
  auto* ig = app.add_subcommand("inspect-graph", "Dump the temporal graph of one video as CSV");
  ig->add_option("--checkpoint", gr.checkpoint, "Checkpoint directory")->required();
  ig->add_option("--data", gr.data, "Dataset directory")->required();
  ig->add_option("--video", gr.video, "Video id (default: first video)");
  ig->add_option("--stream", gr.stream, "dynamic or static")->capture_default_str();
  ig->add_option("--layer", gr.layer, "Graph layer, 1-based")->capture_default_str();
  ig->add_option("--out", gr.out, "CSV output")->required();

  LossArgs l;
  auto* lr = app.add_subcommand("losses-report", "Loss components of a checkpoint on a dataset");
  lr->add_option("--checkpoint", l.checkpoint, "Checkpoint directory")->required();
  lr->add_option("--data", l.data, "Dataset directory")->required();
  lr->add_option("--out", l.out, "CSV output")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitInvalid;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "generate") {
    RunManifest m(fs::path(g.out_dir) / "run_manifest.json", command, args);
    return guarded(m, err, [&] {
      run_generate(g, m, out);
      return kExitOk;
    });
  }
  if (command == "train") {
    RunManifest m(fs::path(t.out) / "run_manifest.json", command, args);
    return guarded(m, err, [&] {
      run_train(t, m, out);
      return kExitOk;
    });
  }
  if (command == "eval") {
    RunManifest m(sibling(e.pred, ".manifest.json"), command, args);
    return guarded(m, err, [&] { return run_eval(e, m, out, err); });
  }
  if (command == "inspect-graph") {
    RunManifest m(sibling(gr.out, ".manifest.json"), command, args);
    return guarded(m, err, [&] {
      run_inspect_graph(gr, m, out);
      return kExitOk;
    });
  }
  RunManifest m(sibling(l.out, ".manifest.json"), command, args);
  return guarded(m, err, [&] {
    run_losses_report(l, m, out);
    return kExitOk;
  });
}

}  // namespace sdgan::cli
