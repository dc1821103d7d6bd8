// SPDX-License-Identifier: Apache-2.0

#include "sdgan/trainer.hpp"

#include "sdgan/errors.hpp"
#include "sdgan/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace sdgan::train {

namespace fs = std::filesystem;
using ag::Mat;
using losses::Branch;

BranchSchedule::BranchSchedule(Schedule kind, int period) : kind_(kind), period_(period) {
  if (period_ < 1) throw ValidationError("schedule period must be >= 1");
}

Branch BranchSchedule::branch(int epoch) const {
  switch (kind_) {
    case Schedule::kFineOnly: return Branch::kFine;
    case Schedule::kCoarseOnly: return Branch::kCoarse;
    case Schedule::kPeht: break;
  }
  return (epoch / period_) % 2 == 0 ? Branch::kCoarse : Branch::kFine;
}

AdamW::AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

void AdamW::step(ParamSet& params, const std::map<std::string, Mat>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Mat& p = params.at(name);
    auto [mit, m_new] = m_.try_emplace(name, Mat::Zero(p.rows(), p.cols()));
    auto [vit, v_new] = v_.try_emplace(name, Mat::Zero(p.rows(), p.cols()));
    Mat& m = mit->second;
    Mat& v = vit->second;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    const Mat update = (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    p -= lr_ * (update + wd_ * p);
  }
}

std::string loss_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << losses::kBreakdownHeader << '\n' << std::setprecision(17);
  for (const auto& e : log) {
    const auto& l = e.loss;
    os << e.epoch << ',' << losses::to_string(e.branch) << ',' << l.query_clip << ',' << l.pna_coarse << ','
       << l.pna_fine << ',' << l.iou_dyn << ',' << l.iou_sta << ',' << l.contra_dyn << ',' << l.contra_sta << ','
       << l.total << '\n';
  }
  return os.str();
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "params");
  nlohmann::json manifest;
  manifest["format"] = "sdgan-checkpoint";
  manifest["version"] = 1;
  manifest["epoch"] = ckpt.epoch;
  manifest["val_miou"] = ckpt.val_miou;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : to_kv(ckpt.config)) cfg[k] = v;
  manifest["config"] = cfg;
  manifest["params"] = nlohmann::json::array();
  for (const auto& [name, value] : ckpt.params) {
    const std::string file = "params/" + name + ".sdgf";
    write_blob(tmp / file, value);
    manifest["params"].push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}, {"file", file}});
  }
  std::ofstream(tmp / "manifest.json") << manifest.dump(2) << '\n';
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError("no checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(dir.string() + "/manifest.json: " + e.what());
  }
  if (manifest.value("format", "") != "sdgan-checkpoint") throw ValidationError(dir.string() + ": not a checkpoint");
  Checkpoint c;
  KeyValues kv;
  for (const auto& [k, v] : manifest.at("config").items()) kv.emplace_back(k, v.get<std::string>());
  c.config = apply_kv(TrainConfig{}, kv);
  c.epoch = manifest.value("epoch", -1);
  c.val_miou = manifest.value("val_miou", 0.0);
  for (const auto& p : manifest.at("params")) {
    Mat value = read_blob(dir / p.at("file").get<std::string>());
    if (value.rows() != p.at("rows").get<Eigen::Index>() || value.cols() != p.at("cols").get<Eigen::Index>()) {
      throw ValidationError("checkpoint block '" + p.at("name").get<std::string>() + "' has the wrong shape");
    }
    c.params.set(p.at("name").get<std::string>(), std::move(value));
  }
  const ParamSet expected = init_model(c.config.model, 0);
  for (const auto& name : expected.names()) {
    if (!c.params.contains(name)) throw ValidationError("checkpoint is missing block '" + name + "'");
    if (c.params.at(name).rows() != expected.at(name).rows() || c.params.at(name).cols() != expected.at(name).cols()) {
      throw ValidationError("checkpoint block '" + name + "' does not match the configured model");
    }
  }
  return c;
}

std::vector<eval::QueryPrediction> infer_video(const ParamSet& params, const ModelConfig& cfg, const VideoRecord& video,
                                               const VideoFeatures& features, const Mat& embeddings, int top_h,
                                               double nms_iou) {
  if (video.num_clips != cfg.clips) {
    throw ValidationError("video '" + video.video_id + "' has " + std::to_string(video.num_clips) +
                          " clips; checkpoint expects " + std::to_string(cfg.clips));
  }
  ag::Tape tape;
  Binder bind(tape, params, false);
  const VideoInput input = make_input(video, features, embeddings);
  const ForwardResult fr = forward(bind, cfg, input, Mode::kInfer);
  std::vector<eval::QueryPrediction> out;
  for (std::size_t q = 0; q < video.queries.size(); ++q) {
    eval::QueryPrediction p;
    p.query_id = video.queries[q].query_id;
    for (const auto& r : proposals::rank_proposals(fr.fine_combined, static_cast<int>(q), top_h, nms_iou)) {
      p.ranked.push_back({clip_span_to_moment(r.span, video.duration, video.num_clips), r.score});
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<eval::QueryPrediction> infer(const ParamSet& params, const ModelConfig& cfg, const Corpus& data, int top_h,
                                         double nms_iou) {
  std::vector<eval::QueryPrediction> out;
  for (std::size_t i = 0; i < data.dataset.videos.size(); ++i) {
    auto preds = infer_video(params, cfg, data.dataset.videos[i], data.features[i], data.embeddings, top_h, nms_iou);
    out.insert(out.end(), std::make_move_iterator(preds.begin()), std::make_move_iterator(preds.end()));
  }
  return out;
}

TrainResult train(const Corpus& data, const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (data.dataset.videos.empty()) throw ValidationError("training set is empty");
  const BranchSchedule schedule(cfg.schedule, cfg.peht_period);

  std::vector<VideoInput> inputs;
  inputs.reserve(data.dataset.videos.size());
  for (std::size_t i = 0; i < data.dataset.videos.size(); ++i) {
    inputs.push_back(make_input(data.dataset.videos[i], data.features[i], data.embeddings));
  }

  TrainResult result;
  result.params = init_model(cfg.model, cfg.seed);
  AdamW opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
  std::mt19937_64 order_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);

  if (opts.out_dir) fs::create_directories(*opts.out_dir / "checkpoints");
  const Corpus& val = opts.validation != nullptr ? *opts.validation : data;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Branch branch = schedule.branch(epoch);
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochLog entry{epoch, branch, {}};
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      std::map<std::string, Mat> grads;
      for (std::size_t k = b; k < end; ++k) {
        ag::Tape tape;
        Binder bind(tape, result.params, true);
        const ForwardResult fr = forward(bind, cfg.model, inputs[order[k]], Mode::kTrain, branch);
        if (!fr.loss.all_finite()) {
          throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch) + " on video '" +
                                   data.dataset.videos[order[k]].video_id + "': " + fr.loss.describe());
        }
        entry.loss += fr.loss;
        tape.backward(fr.total);
        for (auto& [name, g] : bind.gradients()) {
          auto [it, fresh] = grads.try_emplace(name, g);
          if (!fresh) it->second += g;
        }
      }
      const double scale = 1.0 / static_cast<double>(end - b);
      for (auto& [name, g] : grads) g *= scale;
      opt.step(result.params, grads);
    }
    entry.loss /= static_cast<double>(order.size());
    if (!result.params.all_finite()) {
      throw NonFiniteLossError("parameters became non-finite at epoch " + std::to_string(epoch) + ": " +
                               entry.loss.describe());
    }
    result.log.push_back(entry);
    if (opts.on_epoch) opts.on_epoch(entry);

    if (opts.out_dir) {
      const auto preds = infer(result.params, cfg.model, val, cfg.top_h, cfg.nms_iou);
      const double miou = eval::compute_metrics(preds, val.dataset).miou;
      Checkpoint ck{cfg, result.params, epoch, miou};
      save_checkpoint(ck, *opts.out_dir / "checkpoints" / "last");
      if (miou > result.best_miou) {
        result.best_miou = miou;
        result.best_epoch = epoch;
        save_checkpoint(ck, *opts.out_dir / "checkpoints" / "best");
      }
      std::ofstream(*opts.out_dir / "loss_log.csv", std::ios::trunc) << loss_log_csv(result.log);
    }
  }
  return result;
}

}  // namespace sdgan::train
