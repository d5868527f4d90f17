#include "backdiff/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "backdiff/error.hpp"
#include "backdiff/spectral.hpp"

namespace backdiff {

SimilarityReport compare_pairs(std::span<const Graph> a, std::span<const Graph> b, const GedOptions& options) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "pair lists differ in length");
  SimilarityReport r;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const GedResult g = ged(a[k], b[k], options);
    r.pairs.push_back({g.normalized, nld(a[k], b[k]), g.exact});
    r.ged += g.normalized;
    r.nld += r.pairs.back().nld;
  }
  if (!a.empty()) {
    r.ged /= static_cast<double>(a.size());
    r.nld /= static_cast<double>(a.size());
  }
  return r;
}

std::string SimilarityReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "backdiff.similarity.v1";
  j["ged_normalization"] = "max_nodes";
  j["edit_costs"] = "unit";
  j["ged"] = ged;
  j["nld"] = nld;
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : pairs) ps.push_back({{"ged", p.ged}, {"nld", p.nld}, {"exact", p.exact}});
  j["pairs"] = ps;
  return j.dump(2);
}

double similarity_from_ged(double normalized_ged) noexcept { return 1.0 / (1.0 + normalized_ged); }

namespace {

// Reference indices grouped by size.
using SizeIndex = std::map<int, std::vector<std::size_t>>;

const std::vector<std::size_t>* nearest_bucket(const SizeIndex& idx, int n, int* used_size) {
  const std::vector<std::size_t>* best = nullptr;
  int best_gap = 0;
  for (const auto& [size, members] : idx) {
    const int gap = std::abs(size - n);
    if (!best || gap < best_gap) {
      best = &members;
      best_gap = gap;
      *used_size = size;
    }
  }
  return best;
}

double best_similarity(const Graph& g, std::span<const Graph> reference, const std::vector<std::size_t>& bucket,
                       std::size_t skip, const DetectOptions& opt) {
  double best = 0.0;
  std::size_t scanned = 0;
  for (std::size_t r : bucket) {
    if (r == skip) continue;
    if (opt.max_references > 0 && scanned >= opt.max_references) break;
    ++scanned;
    best = std::max(best, similarity_from_ged(ged(g, reference[r], opt.ged).normalized));
    if (best >= 1.0) break;
  }
  return best;
}

}  // namespace

DetectionReport detect(std::span<const Graph> suspects, std::span<const Graph> reference,
                       const DetectOptions& options) {
  if (reference.empty()) throw Error(ErrorCode::EmptyCorpus, "detection needs a clean reference set");
  if (!(options.quantile >= 0.0 && options.quantile <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "quantile must be in [0, 1]");
  }
  SizeIndex idx;
  for (std::size_t r = 0; r < reference.size(); ++r) idx[reference[r].n()].push_back(r);

  DetectionReport out;
  out.quantile = options.quantile;

  // Calibration: each reference against the other references of its size.
  std::vector<double> calib;
  for (std::size_t r = 0; r < reference.size(); ++r) {
    const auto& bucket = idx[reference[r].n()];
    if (bucket.size() < 2) continue;
    calib.push_back(best_similarity(reference[r], reference, bucket, r, options));
  }
  if (calib.empty()) {
    out.warnings.push_back("no size has two references; threshold set to 0");
    out.threshold = 0.0;
  } else {
    std::sort(calib.begin(), calib.end());
    // Lower empirical quantile.
    const auto k = static_cast<std::size_t>(std::floor(options.quantile * static_cast<double>(calib.size() - 1)));
    out.threshold = calib[k];
  }

  for (const auto& s : suspects) {
    const std::vector<std::size_t>* bucket = nullptr;
    const auto it = idx.find(s.n());
    if (it != idx.end()) {
      bucket = &it->second;
    } else {
      int used = 0;
      bucket = nearest_bucket(idx, s.n(), &used);
      out.warnings.push_back("no same-size reference for n=" + std::to_string(s.n()) + "; using n=" +
                             std::to_string(used));
    }
    const double score = best_similarity(s, reference, *bucket, reference.size(), options);
    out.scores.push_back(score);
    out.flagged.push_back(score < out.threshold);
  }
  return out;
}

std::string DetectionReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "backdiff.detect.v1";
  j["similarity"] = "1/(1+ged_normalized)";
  j["quantile"] = quantile;
  j["threshold"] = threshold;
  std::size_t flagged_count = 0;
  for (bool f : flagged) flagged_count += f ? 1 : 0;
  j["flagged_count"] = flagged_count;
  j["scores"] = scores;
  j["flagged"] = flagged;
  j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace backdiff
