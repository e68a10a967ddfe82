#include "qlayout/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qlayout {

void MatchThresholds::validate() const {
  if (!(center_max > 0.0 && normal_max_deg > 0.0 && size_rel_max > 0.0))
    throw Error("eval thresholds must be positive");
  if (!(quadness_min >= 0.0 && quadness_min <= 1.0))
    throw Error("eval quadness_min must lie in [0,1]");
}

EvalReport EvalReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  EvalReport r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.false_negatives = fn;
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  const double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

EvalReport& EvalReport::operator+=(const EvalReport& other) {
  *this = from_counts(true_positives + other.true_positives,
                      false_positives + other.false_positives,
                      false_negatives + other.false_negatives);
  return *this;
}

bool within_thresholds(const Quad& pred, const Quad& gt, const MatchThresholds& th) {
  if ((pred.center - gt.center).norm() > th.center_max) return false;
  if (angle_between_deg(pred.normal, gt.normal) > th.normal_max_deg) return false;
  for (int a = 0; a < 2; ++a) {
    const double err = std::abs(pred.half_size[a] - gt.half_size[a]);
    if (err > th.size_rel_max * gt.half_size[a]) return false;
  }
  return true;
}

PredictionMatch match_predictions(std::span<const Quad> preds, std::span<const Quad> gts,
                                  const MatchThresholds& th) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].quadness >= th.quadness_min) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].quadness > preds[b].quadness;
  });

  PredictionMatch out;
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t p : order) {
    std::size_t best = gts.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || !within_thresholds(preds[p], gts[g], th)) continue;
      const double d = quad_distance(preds[p], gts[g]);
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    if (best < gts.size()) {
      taken[best] = 1;
      out.matched.emplace_back(p, best);
    } else {
      out.unmatched_preds.push_back(p);
    }
  }
  std::sort(out.unmatched_preds.begin(), out.unmatched_preds.end());
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!taken[g]) out.unmatched_gts.push_back(g);
  return out;
}

EvalReport prf1(std::span<const Quad> preds, std::span<const Quad> gts, const MatchThresholds& th) {
  const auto m = match_predictions(preds, gts, th);
  return EvalReport::from_counts(m.matched.size(), m.unmatched_preds.size(), m.unmatched_gts.size());
}

}  // namespace qlayout
