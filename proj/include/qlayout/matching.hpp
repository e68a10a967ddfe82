#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qlayout/geometry.hpp"

namespace qlayout {

/// Teacher -> student correspondence. Every teacher index appears exactly
/// once; student indices may repeat.
struct Correspondence {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct LossWeights {
  double lambda_qmt = 0.05;
  double lambda_gmf = 5e-4;
  int warmup_steps = 100;

  void validate() const;
};

struct LossBreakdown {
  double supervised = 0.0;
  double consistency = 0.0;
  double pseudo_label = 0.0;
  double total = 0.0;
  double effective_lambda_qmt = 0.0;
};

/// A refined quad used as a training target. Its quadness is fixed to 1.
class PseudoLabel {
 public:
  explicit PseudoLabel(const Quad& q);
  const Quad& quad() const { return quad_; }

 private:
  Quad quad_;
};

/// Index of the student quad whose center is nearest to `center` (lowest index on ties).
std::size_t nearest_by_center(const Vec3& center, std::span<const Quad> student);

/// For each teacher quad, the student quad with the nearest center.
Correspondence match_quads(std::span<const Quad> teacher, std::span<const Quad> student);

/// Confidence-weighted mean of teacher-to-matched-student quad distances.
double consistency_loss(std::span<const Quad> teacher, std::span<const Quad> student);

/// Distance between the student quad matched to `teacher_target` and the refined target.
double pseudo_label_loss(const Quad& teacher_target, const PseudoLabel& refined,
                         std::span<const Quad> student);

/// Stand-in for the backbone's supervised loss: mean quad distance over an
/// optimal one-to-one assignment plus mean BCE between quadness and match
/// indicator. Unmatched ground truths count as missed detections (quadness 0,
/// target 1) in the BCE mean.
double supervised_loss(std::span<const Quad> pred, std::span<const Quad> gt);

/// exp(-5 (1 - min(step/warmup, 1))^2)
double warmup_weight(long step, long warmup_steps);

LossBreakdown total_loss(double supervised, double consistency, double pseudo,
                         const LossWeights& weights, long step);

}  // namespace qlayout
