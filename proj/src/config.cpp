#include "qlayout/config.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "qlayout/quad_io.hpp"

namespace qlayout {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads known keys out of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(path_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const char* key) const { return j_.at(key); }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) throw Error(where(key) + ": expected a number");
    out = j_.at(key).get<double>();
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw Error(where(key) + ": expected an integer");
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
    } else {
      const auto s = v.get<std::int64_t>();
      if (s < 0 && !std::is_signed_v<Int>) throw Error(where(key) + ": must be >= 0");
      out = static_cast<Int>(s);
    }
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw Error(where(key) + ": expected true or false");
    out = j_.at(key).get<bool>();
  }

  void range(const char* key, double& lo, double& hi) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw Error(where(key) + ": expected [min, max]");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
  }

  std::string where(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw Error(path_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_perturb(const json& j, const std::string& path, PerturbSpec& p) {
  Section s(j, path);
  s.number("center_noise", p.center_noise);
  s.number("normal_tilt_deg", p.normal_tilt_deg);
  s.range("size_scale_range", p.size_scale_min, p.size_scale_max);
  s.finish();
}

ordered_json perturb_json(const PerturbSpec& p) {
  return {{"center_noise", p.center_noise},
          {"normal_tilt_deg", p.normal_tilt_deg},
          {"size_scale_range", {p.size_scale_min, p.size_scale_max}}};
}

}  // namespace

void RunConfig::validate() const {
  demo.validate();
  perturb.validate();
  if (!demo.scene.footprint.empty()) demo.scene.validate();
  if (normal_k < 3) throw Error("normals.k must be >= 3");
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  Section root(j, "config");

  if (root.has("seed")) {
    std::uint64_t seed = 0;
    root.integer("seed", seed);
    c.seed = seed;
  }
  if (root.has("transform")) {
    Section s(root.at("transform"), "config.transform");
    auto& t = c.demo.trainer.transform;
    if (s.has("coarse_angles_deg")) {
      const json& a = s.at("coarse_angles_deg");
      if (!a.is_array() || a.empty())
        throw Error("config.transform.coarse_angles_deg: expected a nonempty array");
      t.coarse_angles.clear();
      for (const auto& v : a) {
        if (!v.is_number()) throw Error("config.transform.coarse_angles_deg: expected numbers");
        t.coarse_angles.push_back(v.get<double>() * kDeg);
      }
    }
    s.number("jitter_degrees", t.jitter_degrees);
    s.number("flip_prob", t.flip_prob);
    s.range("scale_range", t.scale_min, t.scale_max);
    s.integer("fps_target", t.fps_target);
    s.finish();
  }
  if (root.has("refine")) {
    Section s(root.at("refine"), "config.refine");
    auto& r = c.demo.trainer.refine;
    s.integer("k_s", r.k_s);
    s.number("tau_min", r.tau_min);
    s.integer("em_max_iters", r.em_max_iters);
    s.number("em_tol", r.em_tol);
    s.number("pdf_clamp", r.pdf_clamp);
    s.finish();
  }
  if (root.has("weights")) {
    Section s(root.at("weights"), "config.weights");
    auto& w = c.demo.trainer.weights;
    s.number("lambda_qmt", w.lambda_qmt);
    s.number("lambda_gmf", w.lambda_gmf);
    s.integer("warmup_steps", w.warmup_steps);
    s.finish();
  }
  if (root.has("ema")) {
    Section s(root.at("ema"), "config.ema");
    auto& e = c.demo.trainer.ema;
    s.number("decay", e.decay);
    s.number("lr", e.lr);
    s.number("fd_epsilon", e.fd_epsilon);
    s.integer("steps", e.steps);
    s.finish();
  }
  if (root.has("eval")) {
    Section s(root.at("eval"), "config.eval");
    auto& e = c.demo.eval;
    s.number("center_max", e.center_max);
    s.number("normal_max_deg", e.normal_max_deg);
    s.number("size_rel_max", e.size_rel_max);
    s.number("quadness_min", e.quadness_min);
    s.finish();
  }
  if (root.has("scene")) {
    Section s(root.at("scene"), "config.scene");
    auto& sc = c.demo.scene;
    if (s.has("footprint")) {
      const json& f = s.at("footprint");
      if (!f.is_array()) throw Error("config.scene.footprint: expected an array of [x, y]");
      sc.footprint.clear();
      for (std::size_t i = 0; i < f.size(); ++i) {
        const json& v = f[i];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
          throw Error("config.scene.footprint[" + std::to_string(i) + "]: expected [x, y]");
        sc.footprint.emplace_back(v[0].get<double>(), v[1].get<double>());
      }
    }
    s.number("wall_height", sc.wall_height);
    s.number("point_density", sc.point_density);
    s.number("noise_sigma", sc.noise_sigma);
    s.number("clutter_fraction", sc.clutter_fraction);
    s.number("dropout_fraction", sc.dropout_fraction);
    s.boolean("include_floor_ceiling", sc.include_floor_ceiling);
    s.finish();
  }
  if (root.has("perturb")) read_perturb(root.at("perturb"), "config.perturb", c.perturb);
  if (root.has("demo")) {
    Section s(root.at("demo"), "config.demo");
    s.integer("labeled_scenes", c.demo.labeled_scenes);
    s.integer("unlabeled_scenes", c.demo.unlabeled_scenes);
    s.integer("batch_size", c.demo.batch_size);
    s.integer("spurious_per_scene", c.demo.spurious_per_scene);
    s.number("init_quadness", c.demo.init_quadness);
    if (s.has("init_perturb"))
      read_perturb(s.at("init_perturb"), "config.demo.init_perturb", c.demo.init_perturb);
    s.finish();
  }
  if (root.has("normals")) {
    Section s(root.at("normals"), "config.normals");
    s.integer("k", c.normal_k);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_json_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

ordered_json to_json(const SceneSpec& sc) {
  ordered_json fp = ordered_json::array();
  for (const auto& v : sc.footprint) fp.push_back({v.x(), v.y()});
  return {{"footprint", fp},
          {"wall_height", sc.wall_height},
          {"point_density", sc.point_density},
          {"noise_sigma", sc.noise_sigma},
          {"clutter_fraction", sc.clutter_fraction},
          {"dropout_fraction", sc.dropout_fraction},
          {"include_floor_ceiling", sc.include_floor_ceiling}};
}

ordered_json to_json(const MatchThresholds& e) {
  return {{"center_max", e.center_max},
          {"normal_max_deg", e.normal_max_deg},
          {"size_rel_max", e.size_rel_max},
          {"quadness_min", e.quadness_min}};
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  if (c.seed) j["seed"] = *c.seed;
  const auto& t = c.demo.trainer.transform;
  ordered_json angles = ordered_json::array();
  for (double a : t.coarse_angles) angles.push_back(a / kDeg);
  j["transform"] = {{"coarse_angles_deg", angles},
                    {"jitter_degrees", t.jitter_degrees},
                    {"flip_prob", t.flip_prob},
                    {"scale_range", {t.scale_min, t.scale_max}},
                    {"fps_target", t.fps_target}};
  const auto& r = c.demo.trainer.refine;
  j["refine"] = {{"k_s", r.k_s},
                 {"tau_min", r.tau_min},
                 {"em_max_iters", r.em_max_iters},
                 {"em_tol", r.em_tol},
                 {"pdf_clamp", r.pdf_clamp}};
  const auto& w = c.demo.trainer.weights;
  j["weights"] = {{"lambda_qmt", w.lambda_qmt},
                  {"lambda_gmf", w.lambda_gmf},
                  {"warmup_steps", w.warmup_steps}};
  const auto& e = c.demo.trainer.ema;
  j["ema"] = {{"decay", e.decay}, {"lr", e.lr}, {"fd_epsilon", e.fd_epsilon}, {"steps", e.steps}};
  j["eval"] = to_json(c.demo.eval);
  j["scene"] = to_json(c.demo.scene);
  j["perturb"] = perturb_json(c.perturb);
  j["demo"] = {{"labeled_scenes", c.demo.labeled_scenes},
               {"unlabeled_scenes", c.demo.unlabeled_scenes},
               {"batch_size", c.demo.batch_size},
               {"spurious_per_scene", c.demo.spurious_per_scene},
               {"init_quadness", c.demo.init_quadness},
               {"init_perturb", perturb_json(c.demo.init_perturb)}};
  j["normals"] = {{"k", c.normal_k}};
  return j;
}

ordered_json to_json(const EvalReport& r) {
  return {{"true_positives", r.true_positives},
          {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1}};
}

ordered_json to_json(const MixtureModel& m) {
  return {{"degenerate", m.degenerate},
          {"w0", m.w0},
          {"w1", m.w1},
          {"belong", {{"a", m.belong.a}, {"b", m.belong.b}, {"mean", m.belong.mean()}}},
          {"other", {{"a", m.other.a}, {"b", m.other.b}, {"mean", m.other.mean()}}},
          {"normalization", {{"offset", m.offset}, {"scale", m.scale}}},
          {"pdf_clamp", m.pdf_clamp},
          {"iterations", m.iterations},
          {"log_likelihood", m.log_likelihood}};
}

}  // namespace qlayout
