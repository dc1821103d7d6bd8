// SPDX-License-Identifier: Apache-2.0

#include "sdgan/config.hpp"

#include "sdgan/data_model.hpp"
#include "sdgan/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sdgan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ValidationError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string schedule_name(Schedule s) {
  switch (s) {
    case Schedule::kPeht: return "peht";
    case Schedule::kFineOnly: return "fine";
    case Schedule::kCoarseOnly: return "coarse";
  }
  return "peht";
}

struct Field {
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
};

#define SDGAN_DOUBLE(path)                                                                \
  Field {                                                                                 \
    [](const TrainConfig& c) { return fmt_double(c.path); },                              \
        [](TrainConfig& c, const std::string& k, const std::string& v) { c.path = parse_double(k, v); } \
  }
#define SDGAN_INT(path)                                                                   \
  Field {                                                                                 \
    [](const TrainConfig& c) { return std::to_string(c.path); },                          \
        [](TrainConfig& c, const std::string& k, const std::string& v) {                  \
          c.path = static_cast<decltype(c.path)>(parse_int(k, v));                        \
        }                                                                                 \
  }
#define SDGAN_BOOL(path)                                                                  \
  Field {                                                                                 \
    [](const TrainConfig& c) { return std::string(c.path ? "true" : "false"); },          \
        [](TrainConfig& c, const std::string& k, const std::string& v) { c.path = parse_bool(k, v); } \
  }

// Key order here is the order written to manifests and checkpoints.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"hidden", SDGAN_INT(model.hidden)},
      {"raw_dim", SDGAN_INT(model.raw_dim)},
      {"embed_dim", SDGAN_INT(model.embed_dim)},
      {"clips", SDGAN_INT(model.clips)},
      {"window", SDGAN_INT(model.window)},
      {"ema_decay", SDGAN_DOUBLE(model.ema_decay)},
      {"fusion.literal_residual_norm", SDGAN_BOOL(model.fusion.literal_residual_norm)},
      {"edges", SDGAN_INT(model.graph.k_edges)},
      {"graph_layers", SDGAN_INT(model.graph.layers)},
      {"rbf_sigma", SDGAN_DOUBLE(model.graph.sigma)},
      {"graph_rebuild_per_layer", SDGAN_BOOL(model.graph.rebuild_per_layer)},
      {"qccl_expectation",
       Field{[](const TrainConfig& c) {
               return std::string(c.model.qccl_expectation == dsgn::Expectation::kMean ? "mean" : "sum");
             },
             [](TrainConfig& c, const std::string& k, const std::string& v) {
               if (v == "mean") c.model.qccl_expectation = dsgn::Expectation::kMean;
               else if (v == "sum") c.model.qccl_expectation = dsgn::Expectation::kSum;
               else throw ValidationError("config key '" + k + "': expected mean or sum");
             }}},
      {"lambda_q", SDGAN_DOUBLE(model.weights.query_clip)},
      {"lambda_c", SDGAN_DOUBLE(model.weights.pna_coarse)},
      {"lambda_f", SDGAN_DOUBLE(model.weights.pna_fine)},
      {"lambda_d", SDGAN_DOUBLE(model.weights.dynamic)},
      {"lambda_s", SDGAN_DOUBLE(model.weights.stat)},
      {"tau_pna", SDGAN_DOUBLE(model.weights.tau_pna)},
      {"tau_contra", SDGAN_DOUBLE(model.weights.tau_contra)},
      {"iou_rescale", SDGAN_BOOL(model.iou_rescale)},
      {"iou_rescale_lo", SDGAN_DOUBLE(model.iou_rescale_lo)},
      {"iou_rescale_hi", SDGAN_DOUBLE(model.iou_rescale_hi)},
      {"qccl_in_coarse", SDGAN_BOOL(model.qccl_in_coarse)},
      {"qccl_in_fine", SDGAN_BOOL(model.qccl_in_fine)},
      {"pna_in_coarse", SDGAN_BOOL(model.pna_in_coarse)},
      {"pna_in_fine", SDGAN_BOOL(model.pna_in_fine)},
      {"schedule",
       Field{[](const TrainConfig& c) { return schedule_name(c.schedule); },
             [](TrainConfig& c, const std::string& k, const std::string& v) {
               if (v == "peht") c.schedule = Schedule::kPeht;
               else if (v == "fine") c.schedule = Schedule::kFineOnly;
               else if (v == "coarse") c.schedule = Schedule::kCoarseOnly;
               else throw ValidationError("config key '" + k + "': expected peht, fine or coarse");
             }}},
      {"peht_period", SDGAN_INT(peht_period)},
      {"learning_rate", SDGAN_DOUBLE(learning_rate)},
      {"batch_size", SDGAN_INT(batch_size)},
      {"epochs", SDGAN_INT(epochs)},
      {"weight_decay", SDGAN_DOUBLE(weight_decay)},
      {"beta1", SDGAN_DOUBLE(beta1)},
      {"beta2", SDGAN_DOUBLE(beta2)},
      {"adam_eps", SDGAN_DOUBLE(adam_eps)},
      {"seed", SDGAN_INT(seed)},
      {"top_h", SDGAN_INT(top_h)},
      {"nms_iou", SDGAN_DOUBLE(nms_iou)},
  };
  return table;
}

#undef SDGAN_DOUBLE
#undef SDGAN_INT
#undef SDGAN_BOOL

}  // namespace

void ModelConfig::validate() const {
  if (hidden < 1 || raw_dim < 1 || embed_dim < 1) throw ValidationError("dimensions must be positive");
  if (clips < 3) throw ValidationError("clips must be >= 3 (temporal convolution width)");
  GranularityConfig(clips, window);
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ValidationError("ema_decay must lie in [0, 1)");
  if (graph.k_edges < 1) throw ValidationError("edges must be >= 1");
  if (graph.layers < 0) throw ValidationError("graph_layers must be >= 0");
  if (graph.sigma < 0.0) throw ValidationError("rbf_sigma must be >= 0 (0 selects clips / 8)");
  weights.validate();
  if (iou_rescale && !(iou_rescale_hi > iou_rescale_lo)) throw ValidationError("iou_rescale_hi must exceed iou_rescale_lo");
}

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (peht_period < 1) throw ValidationError("peht_period must be >= 1");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  if (top_h < 1) throw ValidationError("top_h must be >= 1");
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw ValidationError("nms_iou must lie in [0, 1]");
}

KeyValues to_kv(const TrainConfig& cfg) {
  KeyValues kv;
  for (const auto& [k, f] : fields()) kv.emplace_back(k, f.get(cfg));
  return kv;
}

TrainConfig apply_kv(TrainConfig base, const KeyValues& kv) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const auto& [k, f] : fields()) m.emplace(k, &f);
    return m;
  }();
  for (const auto& [k, v] : kv) {
    auto it = index.find(k);
    if (it == index.end()) throw ValidationError("unknown config key '" + k + "'");
    it->second->set(base, k, v);
  }
  return base;
}

KeyValues parse_kv_text(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  TrainConfig cfg = apply_kv(TrainConfig{}, parse_kv_text(ss.str(), path.string()));
  return cfg;
}

std::string format_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void apply_env_overrides(TrainConfig& cfg) {
  if (const char* s = std::getenv("SDGAN_SEED"); s != nullptr && *s != '\0') {
    cfg.seed = static_cast<std::uint64_t>(parse_int("SDGAN_SEED", s));
  }
}

}  // namespace sdgan
