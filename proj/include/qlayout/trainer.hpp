#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qlayout/eval.hpp"
#include "qlayout/geometry.hpp"
#include "qlayout/gmf.hpp"
#include "qlayout/matching.hpp"
#include "qlayout/synth.hpp"
#include "qlayout/transforms.hpp"

namespace qlayout {

/// Flat per-quad parameters: center (3), normal (3), half_size (2), quadness (1).
using ParamVector = Eigen::VectorXd;
inline constexpr int kParamsPerQuad = 9;

ParamVector encode_quads(std::span<const Quad> quads);
/// Decodes with projection applied, so the result is always a set of valid quads.
std::vector<Quad> decode_quads(const ParamVector& params);
/// Re-normalises normals, clamps sizes to >= 0 and quadness to [0,1].
void project_params(ParamVector& params);

struct EmaConfig {
  double decay = 0.999;
  double lr = 0.01;
  double fd_epsilon = 1e-4;
  int steps = 500;

  void validate() const;
};

/// decay * teacher + (1 - decay) * student
ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double decay);

using LossFn = std::function<double(const ParamVector&)>;

/// Central differences, one coordinate at a time.
ParamVector finite_diff_grad(const LossFn& loss, const ParamVector& params, double eps);

struct TrainScene {
  PointCloud cloud;  // with normals
  std::vector<Quad> gt;
  bool labeled = false;
};

struct TrainState {
  ParamVector student;
  ParamVector teacher;
};

struct TrainerConfig {
  TransformConfig transform;
  RefineConfig refine;
  LossWeights weights;
  EmaConfig ema;
};

/// Everything in one step that depends only on the teacher and the scene:
/// the sampled transform, the transformed teacher predictions and labels, and
/// the pseudo-label. `evaluate` then scores any student parameter vector.
class StepObjective {
 public:
  StepObjective(const ParamVector& teacher, const TrainScene& scene, const TrainerConfig& config,
                long step, std::uint64_t seed);

  LossBreakdown evaluate(const ParamVector& student) const;

  const Transform& transform() const { return transform_; }
  const std::vector<Quad>& teacher_quads() const { return teacher_quads_; }
  bool has_pseudo_label() const { return has_pseudo_; }
  const Quad& pseudo_label() const { return pseudo_; }
  std::size_t refine_target() const { return target_; }

 private:
  LossWeights weights_;
  long step_;
  bool labeled_;
  Transform transform_;
  std::vector<Quad> teacher_quads_;
  std::vector<Quad> gt_;
  bool has_pseudo_ = false;
  std::size_t target_ = 0;
  Quad pseudo_;
};

struct StepResult {
  TrainState state;
  LossBreakdown loss;  // evaluated at the incoming student
};

/// One mean-teacher step on a single scene: gradient step on the student,
/// then the EMA teacher update.
StepResult train_step(const TrainState& state, const TrainScene& scene, const TrainerConfig& config,
                      long step, std::uint64_t seed);

struct DemoConfig {
  TrainerConfig trainer;
  MatchThresholds eval;
  int labeled_scenes = 4;
  int unlabeled_scenes = 8;
  int batch_size = 2;  // half labeled, half unlabeled
  SceneSpec scene;     // footprint is replaced per scene
  PerturbSpec init_perturb{0.25, 20.0, 0.75, 1.25};
  int spurious_per_scene = 1;
  double init_quadness = 0.6;

  static DemoConfig defaults();
  void validate() const;
};

struct DemoScenes {
  std::vector<TrainScene> scenes;
  std::vector<ParamVector> initial;  // starting student (= teacher) per scene
};

/// Synthetic labeled and unlabeled rooms with perturbed starting predictions.
DemoScenes make_demo_scenes(const DemoConfig& config, std::uint64_t seed);

struct DemoResult {
  std::vector<LossBreakdown> log;  // one entry per step (batch mean)
  EvalReport initial;
  EvalReport final;
  std::vector<ParamVector> teachers;
};

DemoResult run_demo(const DemoScenes& data, const DemoConfig& config, std::uint64_t seed);

/// Teacher predictions of every scene scored against its synthetic ground truth.
EvalReport evaluate_teachers(const DemoScenes& data, std::span<const ParamVector> teachers,
                             const MatchThresholds& th);

}  // namespace qlayout
