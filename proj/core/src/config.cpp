#include "backdiff/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "backdiff/error.hpp"

namespace backdiff {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::Desk;
  if (name == "full") return Profile::Full;
  throw Error(ErrorCode::BadConfig, "unknown profile '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::desk() {
  // Sized so the whole attack/ablation/defence experiment fits a single core
  // in well under half an hour.
  ExperimentConfig c;
  c.epochs = 60;
  c.optimizer.learning_rate = 2e-3;
  c.sample_count = 200;
  c.finetune_count = 400;
  return c;
}

ExperimentConfig ExperimentConfig::full() {
  ExperimentConfig c;
  c.profile = "full";
  c.steps = 500;
  c.hidden_node = 64;
  c.hidden_edge = 32;
  c.hidden_global = 32;
  c.layers = 4;
  c.epochs = 300;
  c.dataset_count = 100000;
  c.sample_count = 1000;
  c.finetune_epochs = 100;
  return c;
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (profile != "desk" && profile != "full") fail("profile must be desk or full");
  if (!(poison_rate >= 0.0 && poison_rate < 100.0)) fail("poison_rate must be in [0, 100)");
  if (!(mix_ratio > 0.0 && mix_ratio <= 1.0)) fail("mix_ratio must be in (0, 1]");
  if (steps < 2) fail("steps must be >= 2");
  if (epochs < 0 || batch_size < 1) fail("epochs must be >= 0 and batch_size >= 1");
  if (hidden_node < 1 || hidden_edge < 1 || hidden_global < 1 || layers < 0) fail("bad model widths");
  if (!(optimizer.learning_rate > 0.0) || !(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0) || !(optimizer.eps > 0.0) || optimizer.weight_decay < 0.0) {
    fail("bad optimizer settings");
  }
  if (connector_edges < 1) fail("connector_edges must be >= 1");
  if (finetune_epochs < 0 || !(finetune_learning_rate > 0.0)) fail("bad finetune settings");
  if (!(finetune_ratio >= 0.0 && finetune_ratio < 1.0)) fail("finetune_ratio must be in [0, 1)");
  if (!(detect_quantile >= 0.0 && detect_quantile <= 1.0)) fail("detect_quantile must be in [0, 1]");
  if (dataset_count < 1 || max_nodes < 2 || max_nodes > 64 || sample_count < 0) fail("bad data settings");
  if (finetune_count < 0) fail("finetune_count must be >= 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Field table shared by the parser and the canonical writer.
struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(ErrorCode::BadConfig, "key '" + key + "': not a number: '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(ErrorCode::BadConfig, "key '" + key + "': not an integer: '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(ErrorCode::BadConfig, "key '" + key + "': not an unsigned integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::BadConfig, "key '" + key + "': not a boolean: '" + v + "'");
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
#define BD_DOUBLE(key, member)                                                            \
  t[key] = Field{[](const ExperimentConfig& c) { return format_double(c.member); },      \
                 [](ExperimentConfig& c, const std::string& v) { c.member = to_double(key, v); }}
#define BD_INT(key, member)                                                                       \
  t[key] = Field{[](const ExperimentConfig& c) { return std::to_string(c.member); },             \
                 [](ExperimentConfig& c, const std::string& v) {                                 \
                   c.member = static_cast<decltype(c.member)>(to_int(key, v));                   \
                 }}
#define BD_U64(key, member)                                                               \
  t[key] = Field{[](const ExperimentConfig& c) { return std::to_string(c.member); },     \
                 [](ExperimentConfig& c, const std::string& v) { c.member = to_u64(key, v); }}
#define BD_STRING(key, member)                                            \
  t[key] = Field{[](const ExperimentConfig& c) { return c.member; },     \
                 [](ExperimentConfig& c, const std::string& v) { c.member = v; }}
    BD_STRING("profile", profile);
    BD_DOUBLE("poison_rate", poison_rate);
    BD_DOUBLE("mix_ratio", mix_ratio);
    BD_STRING("trigger_atom", trigger_atom);
    BD_STRING("trigger_bond", trigger_bond);
    BD_INT("connector_edges", connector_edges);
    BD_STRING("connector_bond", connector_bond);
    t["persistent_trigger"] = Field{
        [](const ExperimentConfig& c) { return std::string(c.persistent_trigger ? "true" : "false"); },
        [](ExperimentConfig& c, const std::string& v) { c.persistent_trigger = to_bool("persistent_trigger", v); }};
    BD_INT("steps", steps);
    t["schedule"] = Field{[](const ExperimentConfig& c) { return std::string(to_string(c.schedule)); },
                          [](ExperimentConfig& c, const std::string& v) { c.schedule = parse_schedule_kind(v); }};
    BD_INT("hidden_node", hidden_node);
    BD_INT("hidden_edge", hidden_edge);
    BD_INT("hidden_global", hidden_global);
    BD_INT("layers", layers);
    BD_INT("epochs", epochs);
    BD_INT("batch_size", batch_size);
    BD_DOUBLE("learning_rate", optimizer.learning_rate);
    BD_DOUBLE("beta1", optimizer.beta1);
    BD_DOUBLE("beta2", optimizer.beta2);
    BD_DOUBLE("adam_eps", optimizer.eps);
    BD_DOUBLE("weight_decay", optimizer.weight_decay);
    BD_INT("checkpoint_every", checkpoint_every);
    BD_INT("finetune_epochs", finetune_epochs);
    BD_DOUBLE("finetune_learning_rate", finetune_learning_rate);
    BD_DOUBLE("finetune_ratio", finetune_ratio);
    BD_INT("finetune_count", finetune_count);
    BD_DOUBLE("detect_quantile", detect_quantile);
    t["size_conditioned"] = Field{
        [](const ExperimentConfig& c) { return std::string(c.size_conditioned ? "true" : "false"); },
        [](ExperimentConfig& c, const std::string& v) { c.size_conditioned = to_bool("size_conditioned", v); }};
    BD_INT("dataset_count", dataset_count);
    BD_INT("max_nodes", max_nodes);
    BD_INT("sample_count", sample_count);
    BD_U64("seed", seed);
    BD_U64("data_seed", data_seed);
    BD_U64("poison_seed", poison_seed);
#undef BD_DOUBLE
#undef BD_INT
#undef BD_U64
#undef BD_STRING
    return t;
  }();
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

std::string ExperimentConfig::fingerprint() const { return hex64(fnv1a64(canonical_text())); }

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second.set(base, value);
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

DenoiserDims ExperimentConfig::model_dims(const ValenceTable& vt, int edge_types) const {
  DenoiserDims d;
  d.node_types = vt.node_types();
  d.edge_types = edge_types;
  d.hidden_node = hidden_node;
  d.hidden_edge = hidden_edge;
  d.hidden_global = hidden_global;
  d.layers = layers;
  d.max_nodes = max_nodes;
  return d;
}

TriggerSpec ExperimentConfig::trigger(const ValenceTable& vt, int edge_types) const {
  const int atom = vt.node_index(trigger_atom);
  if (atom < 0) throw Error(ErrorCode::BadConfig, "unknown trigger_atom '" + trigger_atom + "'");
  int bond = -1, connector = -1;
  for (int e = 0; e < edge_types; ++e) {
    if (vt.edge_name(e) == trigger_bond) bond = e;
    if (vt.edge_name(e) == connector_bond) connector = e;
  }
  if (bond <= 0) throw Error(ErrorCode::BadConfig, "unknown trigger_bond '" + trigger_bond + "'");
  if (connector <= 0) throw Error(ErrorCode::BadConfig, "unknown connector_bond '" + connector_bond + "'");
  return TriggerSpec::chain3(vt.node_types(), edge_types, atom, bond, connector_edges, connector);
}

}  // namespace backdiff
