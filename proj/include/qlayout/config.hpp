#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "qlayout/eval.hpp"
#include "qlayout/trainer.hpp"

namespace qlayout {

/// Everything a CLI run can be configured with. JSON layout:
///
///   {
///     "seed": 7,
///     "transform": {"coarse_angles_deg": [0,90,180,270], "jitter_degrees": 5,
///                   "flip_prob": 0.5, "scale_range": [0.85,1.15], "fps_target": 1024},
///     "refine":    {"k_s": 100, "tau_min": 0.1, "em_max_iters": 100, "em_tol": 1e-6,
///                   "pdf_clamp": 1e-4},
///     "weights":   {"lambda_qmt": 0.05, "lambda_gmf": 5e-4, "warmup_steps": 100},
///     "ema":       {"decay": 0.99, "lr": 0.01, "fd_epsilon": 1e-4, "steps": 500},
///     "eval":      {"center_max": 0.3, "normal_max_deg": 15, "size_rel_max": 0.3,
///                   "quadness_min": 0.5},
///     "scene":     {"footprint": [[0,0],[4,0],[4,3],[0,3]], "wall_height": 2.5,
///                   "point_density": 40, "noise_sigma": 0, "clutter_fraction": 0,
///                   "dropout_fraction": 0, "include_floor_ceiling": false},
///     "perturb":   {"center_noise": 0.15, "normal_tilt_deg": 10, "size_scale_range": [0.8,1.2]},
///     "demo":      {"labeled_scenes": 4, "unlabeled_scenes": 8, "batch_size": 2,
///                   "spurious_per_scene": 1, "init_quadness": 0.6,
///                   "init_perturb": {...same keys as "perturb"...}},
///     "normals":   {"k": 16}
///   }
///
/// Every section and key is optional; unknown keys are rejected. Without a
/// scene footprint, `synth` draws a random rectilinear room from the seed.
struct RunConfig {
  DemoConfig demo = DemoConfig::defaults();
  PerturbSpec perturb;
  std::optional<std::uint64_t> seed;
  int normal_k = 16;

  TransformConfig& transform() { return demo.trainer.transform; }
  RefineConfig& refine() { return demo.trainer.refine; }
  const RefineConfig& refine() const { return demo.trainer.refine; }
  const MatchThresholds& eval() const { return demo.eval; }
  const SceneSpec& scene() const { return demo.scene; }

  void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const MatchThresholds& th);
nlohmann::ordered_json to_json(const MixtureModel& model);
nlohmann::ordered_json to_json(const SceneSpec& spec);

}  // namespace qlayout
