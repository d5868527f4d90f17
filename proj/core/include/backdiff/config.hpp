#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "backdiff/denoiser.hpp"
#include "backdiff/optimizer.hpp"
#include "backdiff/schedule.hpp"
#include "backdiff/trigger.hpp"
#include "backdiff/valence.hpp"

namespace backdiff {

enum class Profile { Desk, Full };

// Everything that, together with the seeds inside it, determines a run.
struct ExperimentConfig {
  std::string profile = "desk";

  // Poisoning.
  double poison_rate = 5.0;  // percent of training graphs
  double mix_ratio = 0.5;    // r
  std::string trigger_atom = "O";
  std::string trigger_bond = "triple";
  int connector_edges = 3;
  std::string connector_bond = "single";
  bool persistent_trigger = true;

  // Diffusion.
  int steps = 50;
  ScheduleKind schedule = ScheduleKind::Cosine;

  // Model.
  int hidden_node = 32;
  int hidden_edge = 16;
  int hidden_global = 16;
  int layers = 2;

  // Optimisation.
  int epochs = 40;
  int batch_size = 32;
  AdamWOptions optimizer{};
  int checkpoint_every = 0;  // epochs; 0 disables intermediate checkpoints

  // Defences.
  int finetune_epochs = 100;
  double finetune_learning_rate = 2e-4;
  double finetune_ratio = 0.1;  // share of backdoored graphs in adversarial finetuning
  int finetune_count = 0;        // clean graphs per finetuning epoch; 0 uses all
  double detect_quantile = 0.01;

  // Data.
  int dataset_count = 2000;
  int max_nodes = 9;
  int sample_count = 300;
  bool size_conditioned = false;  // per-size limit vectors

  // Seeds.
  std::uint64_t seed = 1;       // training stream
  std::uint64_t data_seed = 7;  // toy dataset
  std::uint64_t poison_seed = 11;

  static ExperimentConfig desk();
  static ExperimentConfig full();
  static ExperimentConfig for_profile(Profile p) { return p == Profile::Desk ? desk() : full(); }

  void validate() const;

  // Sorted key = value lines; parse(canonical_text()) reproduces the config.
  std::string canonical_text() const;
  // Hex FNV-1a 64 digest of canonical_text().
  std::string fingerprint() const;

  DenoiserDims model_dims(const ValenceTable& vt, int edge_types) const;
  TriggerSpec trigger(const ValenceTable& vt, int edge_types) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Flat "key = value" text; '#' starts a comment. Keys not present keep the
// values of `base`. Unknown keys and malformed values throw BadConfig.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = ExperimentConfig::desk());
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = ExperimentConfig::desk());

Profile parse_profile(std::string_view name);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);

}  // namespace backdiff
