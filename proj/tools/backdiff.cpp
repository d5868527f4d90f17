// Command-line front end: data generation/ingestion, training, sampling,
// evaluation and the two defences.
//
// Exit codes: 0 success, 1 usage, 2 data (files, records, checkpoints,
// configs), 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "backdiff/checkpoint.hpp"
#include "backdiff/config.hpp"
#include "backdiff/detect.hpp"
#include "backdiff/error.hpp"
#include "backdiff/io.hpp"
#include "backdiff/metrics.hpp"
#include "backdiff/sampling.hpp"
#include "backdiff/training.hpp"

namespace fs = std::filesystem;
using namespace backdiff;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kEdgeTypes = 4;  // none/single/double/triple

// Error tagged with the file or flag it concerns.
struct CliError {
  int code;
  std::string message;
};

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::BadDistribution:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

// Runs f, prefixing library errors with `what` (a file or flag name).
template <class F>
auto with_context(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw CliError{exit_code_for(e.code()), what + ": " + e.what()};
  } catch (const std::exception& e) {
    throw CliError{kExitData, what + ": " + e.what()};
  }
}

struct Common {
  std::string config_path;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
  cmd->add_option("--config", c.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--profile", c.profile, "Base profile")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--seed", c.seed, "Seed (overrides the config's training seed)");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (needs_out) out->required();
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig base = with_context("--profile", [&] { return ExperimentConfig::for_profile(parse_profile(c.profile)); });
  ExperimentConfig cfg = c.config_path.empty()
                             ? base
                             : with_context(c.config_path, [&] { return load_config(c.config_path, base); });
  if (c.seed) cfg.seed = *c.seed;
  with_context("config", [&] { cfg.validate(); });
  return cfg;
}

std::vector<Graph> read_graphs(const std::string& path, int node_types) {
  return with_context(path, [&] { return read_jsonl_graphs(path, node_types, kEdgeTypes); });
}

void write_text(const std::string& path, const std::string& text) {
  with_context(path, [&] { write_file_atomic(path, text); });
}

void note(const std::string& s) { std::cerr << s << '\n'; }

// ---- subcommands -----------------------------------------------------------

void cmd_gen_data(const Common& c, int count) {
  const ExperimentConfig cfg = resolve_config(c);
  const ValenceTable vt = ValenceTable::organic();
  const int n = count > 0 ? count : cfg.dataset_count;
  const std::uint64_t seed = c.seed ? *c.seed : cfg.data_seed;
  const auto graphs = generate_toy_dataset(n, cfg.max_nodes, vt, seed);
  write_text(c.out, jsonl_text(graphs));
  const auto m = node_marginal(graphs);
  std::string marg;
  for (int k = 0; k < m.size(); ++k) marg += (k ? " " : "") + vt.node_name(k) + "=" + std::to_string(m[k]);
  note("wrote " + std::to_string(graphs.size()) + " graphs to " + c.out + " (node marginal " + marg + ")");
}

void cmd_ingest(const Common& c, const std::string& in, bool lenient) {
  const ValenceTable vt = ValenceTable::organic();
  const std::string bytes = with_context(in, [&] { return read_file(in); });
  SdfOptions opt;
  opt.edge_types = kEdgeTypes;
  opt.strict = !lenient;
  const SdfResult r = with_context(in, [&] { return parse_sdf_subset(bytes, vt, opt); });
  write_text(c.out, jsonl_text(r.graphs));
  for (const auto& s : r.skipped) {
    note(in + ":" + std::to_string(s.line) + ": record " + std::to_string(s.record) + " skipped: " + s.reason);
  }
  note("wrote " + std::to_string(r.graphs.size()) + " graphs to " + c.out + ", skipped " +
       std::to_string(r.skipped.size()));
}

std::vector<Graph> training_data(const ExperimentConfig& cfg, const std::string& data, const ValenceTable& vt) {
  if (!data.empty()) return read_graphs(data, vt.node_types());
  return generate_toy_dataset(cfg.dataset_count, cfg.max_nodes, vt, cfg.data_seed);
}

void cmd_train(const Common& c, const std::string& data, const std::string& log_path) {
  const ExperimentConfig cfg = resolve_config(c);
  const ValenceTable vt = ValenceTable::organic();
  const auto graphs = training_data(cfg, data, vt);
  const PoisonedCorpus corpus = with_context(data.empty() ? "toy dataset" : data, [&] {
    return poison_corpus(graphs, cfg.trigger(vt, kEdgeTypes), cfg.poison_rate, cfg.poison_seed);
  });
  TrainingHooks hooks;
  hooks.on_epoch = [&](const LogRecord& r, const DenoiserModel&) {
    note("epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.loss_clean + r.loss_backdoor));
  };
  const fs::path out(c.out);
  hooks.on_checkpoint = [&](int epoch, const DenoiserModel& model) {
    Checkpoint ck{cfg, {}, {}, model};
    // Intermediate checkpoints carry the final setup, which is fixed before
    // the first epoch.
    ck.setup.schedule = make_schedule(cfg.schedule, cfg.steps);
    ck.setup.limits = limits_for(corpus, cfg.mix_ratio);
    ck.setup.trigger = cfg.trigger(vt, kEdgeTypes);
    std::vector<Graph> all = corpus.clean;
    for (const auto& b : corpus.backdoored) all.push_back(b.graph);
    ck.sizes = SizeDistribution::from_graphs(all);
    if (cfg.size_conditioned) ck.setup.per_size = per_size_limits(corpus.clean, corpus.backdoored_graphs(), cfg.mix_ratio);
    const fs::path p = out.string() + ".epoch" + std::to_string(epoch);
    with_context(p.string(), [&] { save_checkpoint(p, ck); });
  };
  const TrainedModel m = with_context("training", [&] { return run_training(corpus, cfg, vt, hooks); });
  const Checkpoint ck{cfg, m.setup, m.sizes, m.model};
  const std::string bytes = serialize_checkpoint(ck);
  write_text(c.out, bytes);
  if (!log_path.empty()) {
    std::string log;
    for (const auto& r : m.log) log += to_jsonl(r) + "\n";
    write_text(log_path, log);
  }
  std::printf("%s checksum %s params %zu poisoned %zu/%zu\n", c.out.c_str(), hex64(checkpoint_checksum(bytes)).c_str(),
              m.model.parameter_count(), corpus.backdoored.size(), graphs.size());
}

Checkpoint read_checkpoint(const std::string& path) {
  return with_context(path, [&] { return load_checkpoint(path); });
}

void cmd_sample(const Common& c, const std::string& ckpt_path, int count, bool backdoored) {
  const Checkpoint ck = read_checkpoint(ckpt_path);
  const int n = count >= 0 ? count : ck.config.sample_count;
  const std::uint64_t seed = c.seed ? *c.seed : derive_seed(ck.config.seed, 99);
  const Generation gen =
      with_context("sampling", [&] { return generate(ck.model, ck.setup, ck.sizes, n, backdoored, seed); });
  std::string text;
  const std::string fp = ck.config.fingerprint();
  for (std::size_t k = 0; k < gen.graphs.size(); ++k) {
    nlohmann::ordered_json meta;
    meta["backdoored"] = backdoored;
    meta["seed"] = gen.seeds[k];
    meta["config_fingerprint"] = fp;
    text += to_jsonl_line(gen.graphs[k], meta.dump()) + "\n";
  }
  write_text(c.out, text);
  note("wrote " + std::to_string(gen.graphs.size()) + (backdoored ? " backdoored" : " clean") + " samples to " + c.out);
}

// Fingerprint recorded in the first record's meta, if any.
std::string fingerprint_of(const std::string& path) {
  const std::string text = with_context(path, [&] { return read_file(path); });
  const auto eol = text.find('\n');
  const std::string first = text.substr(0, eol);
  if (first.empty()) return {};
  try {
    const auto j = nlohmann::json::parse(first);
    if (j.contains("meta") && j["meta"].contains("config_fingerprint")) return j["meta"]["config_fingerprint"];
  } catch (const std::exception&) {
  }
  return {};
}

void cmd_eval(const Common& c, const std::string& in, const std::string& mode) {
  const ValenceTable vt = ValenceTable::organic();
  const auto graphs = read_graphs(in, vt.node_types());
  EvalReport r = with_context(in, [&] { return evaluate(graphs, vt, parse_eval_mode(mode)); });
  r.config_fingerprint = c.config_path.empty() ? fingerprint_of(in) : resolve_config(c).fingerprint();
  const std::string json = r.to_json();
  if (c.out.empty()) {
    std::printf("%s\n", json.c_str());
  } else {
    write_text(c.out, json + "\n");
  }
  note("validity " + std::to_string(r.validity) + " uniqueness " + std::to_string(r.uniqueness) +
       (r.asr ? " asr " + std::to_string(*r.asr) : std::string()));
}

void cmd_detect(const Common& c, const std::string& in, const std::string& reference, std::optional<double> quantile) {
  const ExperimentConfig cfg = resolve_config(c);
  const ValenceTable vt = ValenceTable::organic();
  const auto suspects = read_graphs(in, vt.node_types());
  const auto refs = read_graphs(reference, vt.node_types());
  DetectOptions opt;
  opt.quantile = quantile ? *quantile : cfg.detect_quantile;
  const DetectionReport r = with_context(reference, [&] { return detect(suspects, refs, opt); });
  write_text(c.out, r.to_json() + "\n");
  std::size_t flagged = 0;
  for (bool f : r.flagged) flagged += f ? 1 : 0;
  note("threshold " + std::to_string(r.threshold) + ", flagged " + std::to_string(flagged) + " of " +
       std::to_string(r.flagged.size()));
}

void cmd_finetune(const Common& c, const std::string& ckpt_path, const std::string& data, const std::string& mode) {
  const Checkpoint ck = read_checkpoint(ckpt_path);
  Common cc = c;
  ExperimentConfig cfg = ck.config;
  if (!c.config_path.empty()) cfg = with_context(c.config_path, [&] { return load_config(c.config_path, cfg); });
  if (c.seed) cfg.seed = *c.seed;
  with_context("config", [&] { cfg.validate(); });
  const ValenceTable vt = ValenceTable::organic();
  PoisonedCorpus corpus;
  corpus.clean = training_data(cfg, data, vt);
  const FinetuneMode fm = with_context("--mode", [&] { return parse_finetune_mode(mode); });
  TrainedModel trained{ck.model, ck.setup, ck.sizes, {}};
  const TrainedModel out = with_context("finetuning", [&] { return finetune(trained, corpus, fm, cfg); });
  const std::string bytes = serialize_checkpoint(Checkpoint{ck.config, out.setup, out.sizes, out.model});
  write_text(c.out, bytes);
  std::printf("%s checksum %s epochs %zu\n", c.out.c_str(), hex64(checkpoint_checksum(bytes)).c_str(), out.log.size());
}

void cmd_inspect(const std::string& ckpt_path) {
  const std::string bytes = with_context(ckpt_path, [&] { return read_file(ckpt_path); });
  const Checkpoint ck = with_context(ckpt_path, [&] { return deserialize_checkpoint(bytes); });
  nlohmann::ordered_json j;
  j["schema"] = "backdiff.checkpoint-info.v1";
  j["checksum"] = hex64(checkpoint_checksum(bytes));
  j["config_fingerprint"] = ck.config.fingerprint();
  j["profile"] = ck.config.profile;
  j["steps"] = ck.setup.schedule.steps();
  j["parameters"] = ck.model.parameter_count();
  const auto& d = ck.model.dims();
  j["dims"] = {{"node_types", d.node_types}, {"edge_types", d.edge_types}, {"hidden_node", d.hidden_node},
               {"hidden_edge", d.hidden_edge}, {"hidden_global", d.hidden_global}, {"layers", d.layers},
               {"max_nodes", d.max_nodes}};
  j["max_size"] = ck.sizes.max_size();
  j["size_conditioned"] = !ck.setup.per_size.empty();
  const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  j["limits"] = {{"node", vec(ck.setup.limits.node)},
                 {"edge", vec(ck.setup.limits.edge)},
                 {"node_backdoored", vec(ck.setup.limits.node_backdoored)},
                 {"edge_backdoored", vec(ck.setup.limits.edge_backdoored)},
                 {"mix_ratio", ck.setup.limits.mix_ratio}};
  std::printf("%s\n", j.dump(2).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor attacks on discrete graph diffusion models"};
  app.require_subcommand(1);

  Common common;
  int count = -1;
  bool backdoored = false;
  bool lenient = false;
  std::string mode, in, data, reference, checkpoint, log_path;
  std::optional<double> quantile;

  auto* gen = app.add_subcommand("gen-data", "Generate the toy molecule dataset as JSONL");
  add_common(gen, common, true);
  gen->add_option("--count", count, "Number of graphs (default: dataset_count)");

  auto* ingest = app.add_subcommand("ingest", "Convert an SDF V2000 file to JSONL");
  add_common(ingest, common, true);
  ingest->add_option("--in", in, "SDF file")->required();
  ingest->add_flag("--lenient", lenient, "Skip structurally damaged records instead of failing");

  auto* train = app.add_subcommand("train", "Poison a corpus and train a model");
  add_common(train, common, true);
  train->add_option("--data", data, "JSONL training graphs (default: toy dataset from the config)");
  train->add_option("--log", log_path, "JSON-lines training log");

  auto* sample = app.add_subcommand("sample", "Sample graphs from a checkpoint");
  add_common(sample, common, true);
  sample->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  sample->add_option("--count", count, "Number of graphs (default: sample_count)");
  sample->add_flag("--backdoored", backdoored, "Start from the backdoored prior");

  auto* eval = app.add_subcommand("eval", "Validity, uniqueness and attack success of a JSONL corpus");
  add_common(eval, common, false);
  eval->add_option("--in", in, "JSONL graphs")->required();
  eval->add_option("--mode", mode, "clean or backdoored")->required()->check(CLI::IsMember({"clean", "backdoored"}));

  auto* det = app.add_subcommand("defend-detect", "Flag suspects by structural similarity to clean references");
  add_common(det, common, true);
  det->add_option("--in", in, "Suspect JSONL graphs")->required();
  det->add_option("--reference", reference, "Clean reference JSONL graphs")->required();
  det->add_option("--quantile", quantile, "Calibration quantile")->check(CLI::Range(0.0, 1.0));

  auto* ft = app.add_subcommand("defend-finetune", "Finetune a checkpoint on clean (or adversarial) data");
  add_common(ft, common, true);
  ft->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ft->add_option("--data", data, "Clean JSONL graphs (default: toy dataset from the config)");
  ft->add_option("--mode", mode, "clean or adversarial")->required()->check(CLI::IsMember({"clean", "adversarial"}));

  auto* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
  inspect->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen) cmd_gen_data(common, count);
    if (*ingest) cmd_ingest(common, in, lenient);
    if (*train) cmd_train(common, data, log_path);
    if (*sample) cmd_sample(common, checkpoint, count, backdoored);
    if (*eval) cmd_eval(common, in, mode);
    if (*det) cmd_detect(common, in, reference, quantile);
    if (*ft) cmd_finetune(common, checkpoint, data, mode);
    if (*inspect) cmd_inspect(checkpoint);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
