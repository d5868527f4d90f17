#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backdiff/graph.hpp"
#include "backdiff/valence.hpp"

namespace backdiff {

enum class EvalMode { Clean, Backdoored };
EvalMode parse_eval_mode(std::string_view name);

struct EvalReport {
  double validity = 0.0;
  double uniqueness = 0.0;
  std::optional<double> asr;  // 1 - validity for backdoored samples
  std::vector<bool> valid;    // per-graph verdicts
  std::string config_fingerprint;

  std::string to_json() const;
};

EvalReport evaluate(std::span<const Graph> corpus, const ValenceTable& vt, EvalMode mode);

}  // namespace backdiff
