#include "qlayout/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qlayout/rng.hpp"

namespace qlayout {

namespace {

Quad decode_one(const ParamVector& p, Eigen::Index base) {
  Quad q;
  q.center = p.segment<3>(base);
  const Vec3 n = p.segment<3>(base + 3);
  const double len = n.norm();
  q.normal = len > 1e-12 ? Vec3(n / len) : Vec3::UnitX();
  q.half_size = p.segment<2>(base + 6).cwiseMax(0.0);
  q.quadness = std::clamp(p[base + 8], 0.0, 1.0);
  return q;
}

std::size_t quad_count(const ParamVector& p) {
  if (p.size() % kParamsPerQuad != 0) throw Error("parameter vector length is not a multiple of 9");
  return static_cast<std::size_t>(p.size() / kParamsPerQuad);
}

}  // namespace

ParamVector encode_quads(std::span<const Quad> quads) {
  ParamVector p(static_cast<Eigen::Index>(quads.size()) * kParamsPerQuad);
  for (std::size_t i = 0; i < quads.size(); ++i) {
    const auto base = static_cast<Eigen::Index>(i) * kParamsPerQuad;
    p.segment<3>(base) = quads[i].center;
    p.segment<3>(base + 3) = quads[i].normal;
    p.segment<2>(base + 6) = quads[i].half_size;
    p[base + 8] = quads[i].quadness;
  }
  return p;
}

std::vector<Quad> decode_quads(const ParamVector& params) {
  const std::size_t n = quad_count(params);
  std::vector<Quad> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(decode_one(params, static_cast<Eigen::Index>(i) * kParamsPerQuad));
  return out;
}

void project_params(ParamVector& params) {
  params = encode_quads(decode_quads(params));
}

void EmaConfig::validate() const {
  if (!(decay >= 0.0 && decay < 1.0)) throw Error("ema: decay must lie in [0,1)");
  if (!(lr > 0.0)) throw Error("ema: lr must be positive");
  if (!(fd_epsilon > 0.0)) throw Error("ema: fd_epsilon must be positive");
  if (steps < 1) throw Error("ema: steps must be positive");
}

ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double decay) {
  if (teacher.size() != student.size()) throw Error("ema_update: length mismatch");
  return decay * teacher + (1.0 - decay) * student;
}

ParamVector finite_diff_grad(const LossFn& loss, const ParamVector& params, double eps) {
  if (!std::isfinite(loss(params))) throw Error("finite_diff_grad: loss is not finite");
  ParamVector grad(params.size());
  ParamVector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + eps;
    const double up = loss(probe);
    probe[i] = params[i] - eps;
    const double down = loss(probe);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw Error("finite_diff_grad: loss is not finite");
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

StepObjective::StepObjective(const ParamVector& teacher, const TrainScene& scene,
                             const TrainerConfig& config, long step, std::uint64_t seed)
    : weights_(config.weights), step_(step), labeled_(scene.labeled) {
  transform_ = sample_transform(config.transform, mix_seed(seed, 0));
  teacher_quads_ = apply_transform_quads(transform_, decode_quads(teacher));
  if (labeled_) gt_ = apply_transform_quads(transform_, scene.gt);

  // The pseudo-label only concerns unlabeled scenes and is skipped when its
  // weight is zero.
  if (!labeled_ && weights_.lambda_gmf > 0.0 && !teacher_quads_.empty()) {
    if (!scene.cloud.has_normals()) throw Error("normals required");
    const PathSeeds seeds = derive_path_seeds(seed);
    const PointCloud sampled =
        config.transform.fps_target < scene.cloud.size()
            ? farthest_point_sampling(scene.cloud, config.transform.fps_target, seeds.teacher)
            : scene.cloud;
    const PointCloud cloud = apply_transform_cloud(transform_, sampled);
    target_ = select_refine_target(teacher_quads_);
    pseudo_ = gmf_refine(teacher_quads_[target_], cloud, config.refine, mix_seed(seed, 3)).refined;
    has_pseudo_ = true;
  }
}

LossBreakdown StepObjective::evaluate(const ParamVector& student) const {
  const auto pred = apply_transform_quads(transform_, decode_quads(student));
  const double sup = labeled_ ? supervised_loss(pred, gt_) : 0.0;
  const double cons = pred.empty() ? 0.0 : consistency_loss(teacher_quads_, pred);
  const double pseudo =
      has_pseudo_ ? pseudo_label_loss(teacher_quads_[target_], PseudoLabel(pseudo_), pred) : 0.0;
  return total_loss(sup, cons, pseudo, weights_, step_);
}

StepResult train_step(const TrainState& state, const TrainScene& scene, const TrainerConfig& config,
                      long step, std::uint64_t seed) {
  config.ema.validate();
  config.weights.validate();
  if (state.student.size() != state.teacher.size())
    throw Error("train_step: student and teacher sizes differ");

  const StepObjective objective(state.teacher, scene, config, step, seed);
  StepResult out;
  out.loss = objective.evaluate(state.student);
  if (!std::isfinite(out.loss.total))
    throw Error("train_step: non-finite loss at step " + std::to_string(step));

  const auto grad = finite_diff_grad(
      [&](const ParamVector& p) { return objective.evaluate(p).total; }, state.student,
      config.ema.fd_epsilon);
  out.state.student = state.student - config.ema.lr * grad;
  project_params(out.state.student);
  out.state.teacher = ema_update(state.teacher, out.state.student, config.ema.decay);
  return out;
}

DemoConfig DemoConfig::defaults() {
  DemoConfig c;
  c.trainer.transform.fps_target = 1024;
  c.trainer.weights.warmup_steps = 100;
  c.trainer.ema.decay = 0.99;
  c.trainer.ema.steps = 500;
  c.scene.point_density = 40.0;
  c.scene.wall_height = 2.5;
  return c;
}

void DemoConfig::validate() const {
  trainer.transform.validate();
  trainer.refine.validate();
  trainer.weights.validate();
  trainer.ema.validate();
  eval.validate();
  init_perturb.validate();
  if (labeled_scenes < 1 || unlabeled_scenes < 1)
    throw Error("demo needs at least one labeled and one unlabeled scene");
  if (batch_size < 2 || batch_size % 2 != 0) throw Error("demo batch_size must be even and >= 2");
  if (spurious_per_scene < 0) throw Error("demo spurious_per_scene must be >= 0");
  if (!(init_quadness >= 0.0 && init_quadness <= 1.0))
    throw Error("demo init_quadness must lie in [0,1]");
}

DemoScenes make_demo_scenes(const DemoConfig& config, std::uint64_t seed) {
  config.validate();
  DemoScenes data;
  const int total = config.labeled_scenes + config.unlabeled_scenes;
  for (int s = 0; s < total; ++s) {
    const std::uint64_t scene_seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(s));
    SceneSpec spec = config.scene;
    spec.footprint = random_footprint(mix_seed(scene_seed, 0));
    Scene scene = generate_scene(spec, mix_seed(scene_seed, 1));

    std::vector<Quad> init;
    for (std::size_t q = 0; q < scene.quads.size(); ++q) {
      Quad p = perturb_quad(scene.quads[q], config.init_perturb, mix_seed(scene_seed, 10 + q));
      p.quadness = config.init_quadness;
      init.push_back(p);
    }
    Rng rng(mix_seed(scene_seed, 2));
    for (int k = 0; k < config.spurious_per_scene; ++k) {
      const Quad& base = scene.quads[static_cast<std::size_t>(k) % scene.quads.size()];
      Quad p = base;
      p.center += Vec3(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), 0.0);
      const double yaw = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      p.normal = Vec3(std::cos(yaw), std::sin(yaw), 0.0);
      p.half_size = Vec2(uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 1.5));
      p.quadness = config.init_quadness;
      init.push_back(p);
    }

    TrainScene ts;
    ts.cloud = std::move(scene.cloud);
    ts.gt = std::move(scene.quads);
    ts.labeled = s < config.labeled_scenes;
    data.scenes.push_back(std::move(ts));
    data.initial.push_back(encode_quads(init));
  }
  return data;
}

EvalReport evaluate_teachers(const DemoScenes& data, std::span<const ParamVector> teachers,
                             const MatchThresholds& th) {
  EvalReport total;
  for (std::size_t s = 0; s < data.scenes.size(); ++s)
    total += prf1(decode_quads(teachers[s]), data.scenes[s].gt, th);
  return total;
}

DemoResult run_demo(const DemoScenes& data, const DemoConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::size_t> labeled, unlabeled;
  for (std::size_t s = 0; s < data.scenes.size(); ++s)
    (data.scenes[s].labeled ? labeled : unlabeled).push_back(s);
  if (labeled.empty() || unlabeled.empty())
    throw Error("run_demo: empty dataset (need labeled and unlabeled scenes)");

  std::vector<TrainState> states;
  for (const auto& p : data.initial) states.push_back({p, p});

  DemoResult result;
  std::vector<ParamVector> teachers;
  for (const auto& s : states) teachers.push_back(s.teacher);
  result.initial = evaluate_teachers(data, teachers, config.eval);

  const std::size_t half = static_cast<std::size_t>(config.batch_size / 2);
  const double decay = config.trainer.ema.decay;
  for (long step = 0; step < config.trainer.ema.steps; ++step) {
    std::vector<std::size_t> batch;
    for (std::size_t j = 0; j < half; ++j) {
      batch.push_back(labeled[(static_cast<std::size_t>(step) * half + j) % labeled.size()]);
      batch.push_back(unlabeled[(static_cast<std::size_t>(step) * half + j) % unlabeled.size()]);
    }
    std::sort(batch.begin(), batch.end());
    batch.erase(std::unique(batch.begin(), batch.end()), batch.end());

    double sup = 0.0, cons = 0.0, pseudo = 0.0;
    std::vector<char> stepped(states.size(), 0);
    for (std::size_t s : batch) {
      const auto r = train_step(states[s], data.scenes[s], config.trainer, step,
                                mix_seed(seed, static_cast<std::uint64_t>(step) * 4096 + s));
      states[s] = r.state;
      stepped[s] = 1;
      sup += r.loss.supervised;
      cons += r.loss.consistency;
      pseudo += r.loss.pseudo_label;
    }
    // Teachers of scenes outside the batch still track their (unchanged) students.
    for (std::size_t s = 0; s < states.size(); ++s)
      if (!stepped[s]) states[s].teacher = ema_update(states[s].teacher, states[s].student, decay);

    const double n = static_cast<double>(batch.size());
    result.log.push_back(total_loss(sup / n, cons / n, pseudo / n, config.trainer.weights, step));
  }

  for (const auto& s : states) result.teachers.push_back(s.teacher);
  result.final = evaluate_teachers(data, result.teachers, config.eval);
  return result;
}

}  // namespace qlayout
