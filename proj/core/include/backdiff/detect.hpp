#pragma once

#include <span>
#include <string>
#include <vector>

#include "backdiff/ged.hpp"
#include "backdiff/graph.hpp"

namespace backdiff {

struct SimilarityPair {
  double ged = 0.0;  // normalised
  double nld = 0.0;
  bool exact = true;
};

struct SimilarityReport {
  double ged = 0.0;  // mean normalised GED over pairs
  double nld = 0.0;  // mean NLD over pairs
  std::vector<SimilarityPair> pairs;

  std::string to_json() const;
};

// Pairwise GED/NLD between a[k] and b[k].
SimilarityReport compare_pairs(std::span<const Graph> a, std::span<const Graph> b, const GedOptions& options = {});

double similarity_from_ged(double normalized_ged) noexcept;

struct DetectOptions {
  double quantile = 0.01;
  GedOptions ged{};
  // Cap on same-size references scanned per graph; 0 scans all of them.
  std::size_t max_references = 0;
};

struct DetectionReport {
  double threshold = 0.0;
  std::vector<double> scores;  // max similarity to same-size references
  std::vector<bool> flagged;
  std::vector<std::string> warnings;
  double quantile = 0.0;

  std::string to_json() const;
};

// Calibrates a similarity threshold on clean-vs-clean same-size pairs (each
// reference against its nearest other reference) at `quantile`, then flags
// suspects whose best same-size similarity falls below it. Sizes with no
// reference fall back to the nearest size, with a warning.
DetectionReport detect(std::span<const Graph> suspects, std::span<const Graph> reference,
                       const DetectOptions& options = {});

}  // namespace backdiff
