#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "backdiff/config.hpp"
#include "backdiff/denoiser.hpp"
#include "backdiff/diffusion.hpp"
#include "backdiff/optimizer.hpp"
#include "backdiff/sampling.hpp"
#include "backdiff/schedule.hpp"
#include "backdiff/trigger.hpp"

namespace backdiff {

struct BackdooredGraph {
  Graph graph;
  TriggerMasks masks;
  std::size_t source = 0;  // index of the original host graph
};

struct PoisonedCorpus {
  std::vector<Graph> clean;
  std::vector<std::size_t> clean_sources;
  std::vector<BackdooredGraph> backdoored;

  std::vector<Graph> backdoored_graphs() const;
};

// Number of graphs a poison rate (percent) selects out of `total`.
std::size_t poison_count(std::size_t total, double percent);

// Picks round(p% * N) hosts in a seeded random order, skipping hosts too
// small for the trigger, and injects the trigger into each.
PoisonedCorpus poison_corpus(std::span<const Graph> graphs, const TriggerSpec& spec, double percent,
                             std::uint64_t seed);

// How backdoored batch members are noised.
enum class BackdoorNoising {
  Pinned,      // backdoored chain with the trigger re-imposed at every step
  CleanChain,  // trigger present only at t = 0, then the clean chain
};

struct BatchItem {
  const Graph* graph = nullptr;
  const TriggerMasks* masks = nullptr;  // null for clean members
};

struct StepResult {
  double loss = 0.0;           // loss_clean + loss_backdoor
  double loss_clean = 0.0;     // sum over clean members / batch size
  double loss_backdoor = 0.0;  // sum over backdoored members / batch size
};

// Batch loss without touching the parameters; noise draws match train_step
// for the same seed.
StepResult batch_loss(const DenoiserModel& model, std::span<const BatchItem> batch, const DiffusionSetup& setup,
                      BackdoorNoising noising, std::uint64_t seed);

// One optimiser update. The model is only modified after every member's
// gradient is finite, so a NonFiniteLoss leaves it at its last good state.
StepResult train_step(DenoiserModel& model, AdamW& optimizer, std::span<const BatchItem> batch,
                      const DiffusionSetup& setup, BackdoorNoising noising, std::uint64_t seed);

struct LogRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double loss_clean = 0.0;
  double loss_backdoor = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

std::string to_jsonl(const LogRecord& r);

struct TrainingHooks {
  std::function<void(int epoch, const DenoiserModel&)> on_checkpoint;
  std::function<void(const LogRecord&, const DenoiserModel&)> on_epoch;
};

struct TrainedModel {
  DenoiserModel model;
  DiffusionSetup setup;
  SizeDistribution sizes;
  std::vector<LogRecord> log;
};

// Limits for a poisoned corpus; with no backdoored graphs the backdoored
// limits equal the clean ones.
LimitDistributions limits_for(const PoisonedCorpus& corpus, double r);

// Backdoored training end to end. Deterministic given config seeds.
TrainedModel run_training(const PoisonedCorpus& corpus, const ExperimentConfig& config, const ValenceTable& vt,
                          const TrainingHooks& hooks = {});

enum class FinetuneMode { Clean, Adversarial };
FinetuneMode parse_finetune_mode(std::string_view name);

// Continues training a trained model. Clean mode uses only clean graphs.
// Adversarial mode adds freshly backdoored graphs (config.finetune_ratio of
// the finetuning set) noised with the clean chain toward the clean limit.
TrainedModel finetune(const TrainedModel& trained, const PoisonedCorpus& corpus, FinetuneMode mode,
                      const ExperimentConfig& config, const TrainingHooks& hooks = {});

}  // namespace backdiff
