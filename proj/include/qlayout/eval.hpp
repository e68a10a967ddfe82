#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

struct MatchThresholds {
  double center_max = 0.3;
  double normal_max_deg = 15.0;
  double size_rel_max = 0.3;
  double quadness_min = 0.5;

  void validate() const;
};

struct EvalReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  EvalReport& operator+=(const EvalReport& other);
};

struct PredictionMatch {
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (pred, gt)
  std::vector<std::size_t> unmatched_preds;                 // surviving the quadness filter
  std::vector<std::size_t> unmatched_gts;
};

/// True when `pred` is within every geometric threshold of `gt`.
bool within_thresholds(const Quad& pred, const Quad& gt, const MatchThresholds& th);

/// Greedy one-to-one matching in descending quadness order; each prediction
/// takes the nearest (quad distance) free ground truth within thresholds.
PredictionMatch match_predictions(std::span<const Quad> preds, std::span<const Quad> gts,
                                  const MatchThresholds& th);

EvalReport prf1(std::span<const Quad> preds, std::span<const Quad> gts, const MatchThresholds& th);

}  // namespace qlayout
