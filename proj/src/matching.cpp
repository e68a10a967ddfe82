#include "qlayout/matching.hpp"

#include <algorithm>
#include <cmath>

#include "qlayout/assignment.hpp"

namespace qlayout {

namespace {

constexpr double kBceEps = 1e-6;

double bce(double p, bool positive) {
  const double q = positive ? p : 1.0 - p;
  return -std::log(std::clamp(q, kBceEps, 1.0));
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_qmt >= 0.0) || !(lambda_gmf >= 0.0)) throw Error("loss weights must be >= 0");
  if (warmup_steps < 1) throw Error("warmup_steps must be >= 1");
}

PseudoLabel::PseudoLabel(const Quad& q) : quad_(q) {
  if (q.quadness != 1.0) throw Error("pseudo-label quadness must be exactly 1.0");
  validate(q);
}

std::size_t nearest_by_center(const Vec3& center, std::span<const Quad> student) {
  if (student.empty()) throw Error("no candidates");
  std::size_t best = 0;
  double best_d = (student[0].center - center).squaredNorm();
  for (std::size_t j = 1; j < student.size(); ++j) {
    const double d = (student[j].center - center).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Correspondence match_quads(std::span<const Quad> teacher, std::span<const Quad> student) {
  if (student.empty()) throw Error("no candidates");
  Correspondence c;
  c.pairs.reserve(teacher.size());
  for (std::size_t i = 0; i < teacher.size(); ++i)
    c.pairs.emplace_back(i, nearest_by_center(teacher[i].center, student));
  return c;
}

double consistency_loss(std::span<const Quad> teacher, std::span<const Quad> student) {
  if (teacher.empty()) return 0.0;
  const auto match = match_quads(teacher, student);
  double sum = 0.0;
  for (const auto& [t, s] : match.pairs)
    sum += quad_distance(student[s], teacher[t]) * teacher[t].quadness;
  return sum / static_cast<double>(teacher.size());
}

double pseudo_label_loss(const Quad& teacher_target, const PseudoLabel& refined,
                         std::span<const Quad> student) {
  const std::size_t s = nearest_by_center(teacher_target.center, student);
  return quad_distance(student[s], refined.quad());
}

double supervised_loss(std::span<const Quad> pred, std::span<const Quad> gt) {
  if (pred.empty() && gt.empty()) return 0.0;

  std::vector<int> pred_to_gt(pred.size(), -1);
  if (!pred.empty() && !gt.empty()) {
    Eigen::MatrixXd cost(pred.size(), gt.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
      for (std::size_t j = 0; j < gt.size(); ++j) cost(i, j) = quad_distance(pred[i], gt[j]);
    pred_to_gt = solve_assignment(cost);
  }

  double geometric = 0.0;
  std::size_t matched = 0;
  double classification = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool hit = pred_to_gt[i] >= 0;
    if (hit) {
      geometric += quad_distance(pred[i], gt[pred_to_gt[i]]);
      ++matched;
    }
    classification += bce(pred[i].quadness, hit);
  }
  const std::size_t missed = gt.size() - matched;
  classification += static_cast<double>(missed) * bce(0.0, true);

  double loss = classification / static_cast<double>(pred.size() + missed);
  if (matched > 0) loss += geometric / static_cast<double>(matched);
  return loss;
}

double warmup_weight(long step, long warmup_steps) {
  if (warmup_steps < 1) throw Error("warmup_steps must be >= 1");
  const double t = std::min(static_cast<double>(std::max(step, 0L)) / warmup_steps, 1.0);
  const double r = 1.0 - t;
  return std::exp(-5.0 * r * r);
}

LossBreakdown total_loss(double supervised, double consistency, double pseudo,
                         const LossWeights& weights, long step) {
  LossBreakdown b;
  b.supervised = supervised;
  b.consistency = consistency;
  b.pseudo_label = pseudo;
  b.effective_lambda_qmt = weights.lambda_qmt * warmup_weight(step, weights.warmup_steps);
  b.total = supervised + b.effective_lambda_qmt * consistency + weights.lambda_gmf * pseudo;
  return b;
}

}  // namespace qlayout
