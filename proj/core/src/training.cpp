#include "backdiff/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "backdiff/error.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kStepStream = 3;
constexpr std::uint64_t kFinetuneStream = 4;
constexpr std::uint64_t kFinetuneInjectStream = 5;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

struct NoisedMember {
  int t = 0;
  Graph g_t;
};

NoisedMember noise_member(const BatchItem& item, const DiffusionSetup& setup, BackdoorNoising noising,
                          std::uint64_t member_seed) {
  const auto& sched = setup.schedule;
  const auto& lim = setup.limits_for(item.graph->n());
  Rng rng(derive_seed(member_seed, 0));
  NoisedMember out;
  out.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
  const std::uint64_t noise_seed = derive_seed(member_seed, 1);
  if (item.masks && noising == BackdoorNoising::Pinned) {
    const SoftGraph soft = forward_marginal_backdoored(*item.graph, *item.masks, setup.trigger, sched, lim, out.t);
    out.g_t = sample_noisy(soft, item.masks, noise_seed);
  } else {
    out.g_t = sample_noisy(forward_marginal_clean(*item.graph, sched, lim, out.t), nullptr, noise_seed);
  }
  return out;
}

StepResult run_batch(const DenoiserModel& model, std::span<const BatchItem> batch, const DiffusionSetup& setup,
                     BackdoorNoising noising, std::uint64_t seed, Gradients* grads) {
  if (batch.empty()) throw Error(ErrorCode::EmptyCorpus, "empty batch");
  StepResult r;
  const int steps = setup.schedule.steps();
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& item = batch[k];
    const NoisedMember m = noise_member(item, setup, noising, derive_seed(seed, k));
    const LossResult l = grads ? loss_and_gradients(model, *item.graph, m.g_t, m.t, steps, *grads)
                               : denoiser_loss(model, *item.graph, m.g_t, m.t, steps);
    if (!std::isfinite(l.loss)) throw Error(ErrorCode::NonFiniteLoss, "non-finite loss");
    (item.masks ? r.loss_backdoor : r.loss_clean) += l.loss;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  r.loss_clean *= inv;
  r.loss_backdoor *= inv;
  r.loss = r.loss_clean + r.loss_backdoor;
  if (grads) {
    for (auto& g : *grads) g *= inv;
  }
  return r;
}

struct EpochStats {
  double clean = 0.0;
  double backdoor = 0.0;
  std::size_t members = 0;
};

// One pass over `items` in a seeded order; returns the epoch means.
EpochStats run_epoch(DenoiserModel& model, AdamW& opt, const std::vector<BatchItem>& items,
                     const DiffusionSetup& setup, BackdoorNoising noising, int batch_size, std::uint64_t epoch_seed) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(epoch_seed, kShuffleStream));
  shuffle(order, rng);

  EpochStats s;
  std::vector<BatchItem> batch;
  for (std::size_t start = 0, b = 0; start < order.size(); start += static_cast<std::size_t>(batch_size), ++b) {
    batch.clear();
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    for (std::size_t k = start; k < end; ++k) batch.push_back(items[order[k]]);
    const StepResult r = train_step(model, opt, batch, setup, noising, derive_seed(epoch_seed, kStepStream + 16 * b));
    const double w = static_cast<double>(batch.size());
    s.clean += r.loss_clean * w;
    s.backdoor += r.loss_backdoor * w;
    s.members += batch.size();
  }
  if (s.members > 0) {
    s.clean /= static_cast<double>(s.members);
    s.backdoor /= static_cast<double>(s.members);
  }
  return s;
}

}  // namespace

std::vector<Graph> PoisonedCorpus::backdoored_graphs() const {
  std::vector<Graph> out;
  out.reserve(backdoored.size());
  for (const auto& b : backdoored) out.push_back(b.graph);
  return out;
}

std::size_t poison_count(std::size_t total, double percent) {
  return static_cast<std::size_t>(std::llround(percent / 100.0 * static_cast<double>(total)));
}

PoisonedCorpus poison_corpus(std::span<const Graph> graphs, const TriggerSpec& spec, double percent,
                             std::uint64_t seed) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot poison an empty corpus");
  if (!(percent >= 0.0 && percent < 100.0)) throw Error(ErrorCode::OutOfRange, "poison rate must be in [0, 100)");
  const std::size_t want = poison_count(graphs.size(), percent);

  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<bool> poisoned(graphs.size(), false);
  PoisonedCorpus out;
  for (std::size_t k = 0; k < order.size() && out.backdoored.size() < want; ++k) {
    const std::size_t idx = order[k];
    try {
      InjectionResult inj = inject_trigger(graphs[idx], spec, derive_seed(seed, idx));
      out.backdoored.push_back({std::move(inj.graph), std::move(inj.masks), idx});
      poisoned[idx] = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HostTooSmall) throw;
    }
  }
  if (out.backdoored.size() < want) {
    throw Error(ErrorCode::InsufficientHosts, "only " + std::to_string(out.backdoored.size()) + " of " +
                                                  std::to_string(want) + " requested hosts can take the trigger");
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (poisoned[i]) continue;
    out.clean.push_back(graphs[i]);
    out.clean_sources.push_back(i);
  }
  return out;
}

StepResult batch_loss(const DenoiserModel& model, std::span<const BatchItem> batch, const DiffusionSetup& setup,
                      BackdoorNoising noising, std::uint64_t seed) {
  return run_batch(model, batch, setup, noising, seed, nullptr);
}

StepResult train_step(DenoiserModel& model, AdamW& optimizer, std::span<const BatchItem> batch,
                      const DiffusionSetup& setup, BackdoorNoising noising, std::uint64_t seed) {
  Gradients grads = model.zero_gradients();
  const StepResult r = run_batch(model, batch, setup, noising, seed, &grads);
  optimizer.step(model, grads);
  return r;
}

std::string to_jsonl(const LogRecord& r) {
  nlohmann::ordered_json j;
  j["schema"] = "backdiff.trainlog.v1";
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["loss_clean"] = r.loss_clean;
  j["loss_backdoor"] = r.loss_backdoor;
  j["lr"] = r.lr;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

LimitDistributions limits_for(const PoisonedCorpus& corpus, double r) {
  const std::vector<Graph> bd = corpus.backdoored_graphs();
  if (bd.empty()) return estimate_limits(corpus.clean, corpus.clean, r);
  return estimate_limits(corpus.clean, bd, r);
}

TrainedModel run_training(const PoisonedCorpus& corpus, const ExperimentConfig& config, const ValenceTable& vt,
                          const TrainingHooks& hooks) {
  config.validate();
  if (corpus.clean.empty() && corpus.backdoored.empty()) throw Error(ErrorCode::EmptyCorpus, "empty training corpus");
  const Graph& any = corpus.clean.empty() ? corpus.backdoored.front().graph : corpus.clean.front();
  const int edge_types = any.edge_types();

  std::vector<Graph> all = corpus.clean;
  for (const auto& b : corpus.backdoored) all.push_back(b.graph);

  TrainedModel out;
  out.setup.schedule = make_schedule(config.schedule, config.steps);
  out.setup.limits = limits_for(corpus, config.mix_ratio);
  if (config.size_conditioned) {
    out.setup.per_size = per_size_limits(corpus.clean, corpus.backdoored_graphs(), config.mix_ratio);
  }
  out.setup.trigger = config.trigger(vt, edge_types);
  out.sizes = SizeDistribution::from_graphs(all);
  out.model = init_model(config.model_dims(vt, edge_types), derive_seed(config.seed, kInitStream));

  std::vector<BatchItem> items;
  for (const auto& g : corpus.clean) items.push_back({&g, nullptr});
  for (const auto& b : corpus.backdoored) items.push_back({&b.graph, &b.masks});

  const BackdoorNoising noising = config.persistent_trigger ? BackdoorNoising::Pinned : BackdoorNoising::CleanChain;
  AdamW opt(out.model, config.optimizer);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochStats s = run_epoch(out.model, opt, items, out.setup, noising, config.batch_size,
                                   derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    LogRecord rec;
    rec.epoch = epoch;
    rec.step = opt.steps_taken();
    rec.loss_clean = s.clean;
    rec.loss_backdoor = s.backdoor;
    rec.lr = config.optimizer.learning_rate;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, out.model);
    if (hooks.on_checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      hooks.on_checkpoint(epoch, out.model);
    }
  }
  return out;
}

FinetuneMode parse_finetune_mode(std::string_view name) {
  if (name == "clean") return FinetuneMode::Clean;
  if (name == "adversarial") return FinetuneMode::Adversarial;
  throw Error(ErrorCode::BadConfig, "unknown finetune mode '" + std::string(name) + "'");
}

TrainedModel finetune(const TrainedModel& trained, const PoisonedCorpus& corpus, FinetuneMode mode,
                      const ExperimentConfig& config, const TrainingHooks& hooks) {
  config.validate();
  if (corpus.clean.empty()) throw Error(ErrorCode::EmptyCorpus, "finetuning needs clean graphs");
  TrainedModel out = trained;
  out.log.clear();
  const std::uint64_t base = derive_seed(config.seed, kFinetuneStream);

  // Clean subset used every epoch.
  std::vector<std::size_t> pick(corpus.clean.size());
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  {
    Rng rng(derive_seed(base, 0));
    shuffle(pick, rng);
  }
  if (config.finetune_count > 0 && static_cast<std::size_t>(config.finetune_count) < pick.size()) {
    pick.resize(static_cast<std::size_t>(config.finetune_count));
  }
  std::vector<BatchItem> items;
  for (std::size_t i : pick) items.push_back({&corpus.clean[i], nullptr});

  // Adversarial mode: backdoored copies of clean graphs, share finetune_ratio
  // of the finetuning set, mapped to the clean limit.
  std::vector<BackdooredGraph> fresh;
  if (mode == FinetuneMode::Adversarial && config.finetune_ratio > 0.0) {
    const auto want = static_cast<std::size_t>(
        std::llround(config.finetune_ratio / (1.0 - config.finetune_ratio) * static_cast<double>(pick.size())));
    Rng rng(derive_seed(base, kFinetuneInjectStream));
    std::size_t attempts = 0;
    while (fresh.size() < want && attempts < 50 * (want + 1)) {
      const std::size_t idx = static_cast<std::size_t>(rng.below(corpus.clean.size()));
      ++attempts;
      try {
        InjectionResult inj = inject_trigger(corpus.clean[idx], out.setup.trigger, rng.next_u64());
        fresh.push_back({std::move(inj.graph), std::move(inj.masks), idx});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::HostTooSmall) throw;
      }
    }
    if (fresh.size() < want) throw Error(ErrorCode::InsufficientHosts, "too few hosts for adversarial finetuning");
  }
  for (const auto& b : fresh) items.push_back({&b.graph, &b.masks});

  AdamWOptions o = config.optimizer;
  o.learning_rate = config.finetune_learning_rate;
  AdamW opt(out.model, o);
  for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochStats s = run_epoch(out.model, opt, items, out.setup, BackdoorNoising::CleanChain, config.batch_size,
                                   derive_seed(base, 1000 + static_cast<std::uint64_t>(epoch)));
    LogRecord rec;
    rec.epoch = epoch;
    rec.step = opt.steps_taken();
    rec.loss_clean = s.clean;
    rec.loss_backdoor = s.backdoor;
    rec.lr = o.learning_rate;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec, out.model);
    if (hooks.on_checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      hooks.on_checkpoint(epoch, out.model);
    }
  }
  return out;
}

}  // namespace backdiff
