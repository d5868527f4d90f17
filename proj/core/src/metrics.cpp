#include "backdiff/metrics.hpp"

#include <unordered_set>

#include <json.hpp>

#include "backdiff/canonical.hpp"
#include "backdiff/error.hpp"

namespace backdiff {

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "clean") return EvalMode::Clean;
  if (name == "backdoored") return EvalMode::Backdoored;
  throw Error(ErrorCode::BadConfig, "unknown eval mode '" + std::string(name) + "'");
}

EvalReport evaluate(std::span<const Graph> corpus, const ValenceTable& vt, EvalMode mode) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot evaluate an empty corpus");
  EvalReport r;
  std::unordered_set<std::uint64_t> hashes;
  std::size_t valid = 0;
  for (const auto& g : corpus) {
    const bool ok = is_valid_molecule(g, vt);
    r.valid.push_back(ok);
    valid += ok ? 1 : 0;
    hashes.insert(canonical_hash(g));
  }
  const double total = static_cast<double>(corpus.size());
  r.validity = static_cast<double>(valid) / total;
  r.uniqueness = static_cast<double>(hashes.size()) / total;
  if (mode == EvalMode::Backdoored) r.asr = 1.0 - r.validity;
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "backdiff.eval.v1";
  j["count"] = valid.size();
  j["validity"] = validity;
  j["uniqueness"] = uniqueness;
  if (asr) j["asr"] = *asr;
  j["config_fingerprint"] = config_fingerprint;
  j["valid"] = valid;
  return j.dump(2);
}

}  // namespace backdiff
