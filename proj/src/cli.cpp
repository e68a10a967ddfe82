#include "qlayout/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qlayout/config.hpp"
#include "qlayout/gmf.hpp"
#include "qlayout/ply.hpp"
#include "qlayout/quad_io.hpp"
#include "qlayout/rng.hpp"
#include "qlayout/svg.hpp"
#include "qlayout/synth.hpp"
#include "qlayout/trainer.hpp"

namespace qlayout {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
};

RunConfig resolve_config(Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (!c.seed_given && cfg.seed) c.seed = *cfg.seed;
  cfg.seed = c.seed;
  return cfg;
}

fs::path prepare_out_dir(const Common& c) {
  const fs::path dir = c.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + c.out_dir + "': " + ec.message());
  return dir;
}

void add_common(CLI::App* sub, Common& c, bool needs_out_dir = true) {
  sub->add_option("--config", c.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "Random seed (overrides the config seed)");
  auto* opt = sub->add_option("--out-dir", c.out_dir, "Directory for output files");
  if (needs_out_dir) opt->required();
}

void write_json(const fs::path& path, const ordered_json& j) { write_text_file(path, j.dump(2) + "\n"); }

int run_synth(Common& c, const std::string& format, std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  const fs::path dir = prepare_out_dir(c);
  SceneSpec spec = cfg.scene();
  if (spec.footprint.empty()) spec.footprint = random_footprint(mix_seed(c.seed, 0));
  const Scene scene = generate_scene(spec, mix_seed(c.seed, 1));

  std::vector<Quad> noisy;
  for (std::size_t i = 0; i < scene.quads.size(); ++i)
    noisy.push_back(perturb_quad(scene.quads[i], cfg.perturb, mix_seed(c.seed, 1000 + i)));

  save_cloud(dir / "scene.ply", scene.cloud,
             format == "ascii" ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  save_quads(dir / "quads.json", scene.quads);
  save_quads(dir / "noisy_quads.json", noisy);

  ordered_json report;
  report["command"] = "synth";
  report["seed"] = c.seed;
  report["config"] = to_json(cfg);
  report["scene"] = to_json(spec);
  report["points"] = scene.cloud.size();
  report["quads"] = scene.quads.size();
  write_json(dir / "synth_report.json", report);
  out << "synth: " << scene.cloud.size() << " points, " << scene.quads.size() << " quads -> "
      << dir.string() << "\n";
  return 0;
}

int run_refine(Common& c, const std::string& cloud_path, const std::string& quads_path,
               std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  const fs::path dir = prepare_out_dir(c);
  PointCloud cloud = load_cloud(cloud_path);
  const bool estimated = !cloud.has_normals();
  if (estimated) cloud = estimate_normals(cloud, cfg.normal_k);
  const auto quads = load_quads(quads_path);

  std::vector<Quad> refined;
  std::vector<std::vector<char>> masks;
  ordered_json per_quad = ordered_json::array();
  for (std::size_t i = 0; i < quads.size(); ++i) {
    GmfResult r;
    try {
      r = gmf_refine(quads[i], cloud, cfg.refine(), mix_seed(c.seed, i));
    } catch (const Error& e) {
      throw Error("quad " + std::to_string(i) + ": " + e.what());
    }
    refined.push_back(r.refined);
    std::vector<char> mask(cloud.size(), 0);
    for (std::size_t k : r.kept) mask[k] = 1;
    masks.push_back(std::move(mask));
    per_quad.push_back({{"index", i},
                        {"kept", r.kept.size()},
                        {"mixture", to_json(r.model)},
                        {"input", quad_to_json(quads[i])},
                        {"refined", quad_to_json(r.refined)}});
  }

  save_quads(dir / "refined_quads.json", refined);
  std::ostringstream csv;
  csv << "point";
  for (std::size_t i = 0; i < quads.size(); ++i) csv << ",quad" << i;
  csv << "\n";
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    csv << p;
    for (const auto& m : masks) csv << ',' << static_cast<int>(m[p]);
    csv << "\n";
  }
  write_text_file(dir / "kept_mask.csv", csv.str());

  ordered_json report;
  report["command"] = "refine";
  report["seed"] = c.seed;
  report["config"] = to_json(cfg);
  report["cloud"] = cloud_path;
  report["quads"] = quads_path;
  report["normals_estimated"] = estimated;
  report["results"] = per_quad;
  write_json(dir / "refine_report.json", report);
  out << "refine: " << refined.size() << " quads refined -> " << dir.string() << "\n";
  return 0;
}

int run_eval(Common& c, const std::string& pred_path, const std::string& gt_path,
             std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  const auto preds = load_quads(pred_path);
  const auto gts = load_quads(gt_path);
  const EvalReport r = prf1(preds, gts, cfg.eval());

  out << "thresholds: center_max=" << num(cfg.eval().center_max)
      << " normal_max_deg=" << num(cfg.eval().normal_max_deg)
      << " size_rel_max=" << num(cfg.eval().size_rel_max)
      << " quadness_min=" << num(cfg.eval().quadness_min) << "\n";
  out << "TP=" << r.true_positives << " FP=" << r.false_positives << " FN=" << r.false_negatives
      << " precision=" << num(r.precision) << " recall=" << num(r.recall) << " F1=" << num(r.f1)
      << "\n";

  if (!c.out_dir.empty()) {
    const fs::path dir = prepare_out_dir(c);
    ordered_json report;
    report["command"] = "eval";
    report["seed"] = c.seed;
    report["thresholds"] = to_json(cfg.eval());
    report["pred"] = pred_path;
    report["gt"] = gt_path;
    report["report"] = to_json(r);
    write_json(dir / "eval_report.json", report);
    std::ostringstream csv;
    csv << "true_positives,false_positives,false_negatives,precision,recall,f1\n"
        << r.true_positives << ',' << r.false_positives << ',' << r.false_negatives << ','
        << num(r.precision) << ',' << num(r.recall) << ',' << num(r.f1) << "\n";
    write_text_file(dir / "eval_report.csv", csv.str());
  }
  return 0;
}

int run_demo_train(Common& c, bool no_transforms, std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  if (no_transforms) cfg.transform() = TransformConfig::disabled();
  const fs::path dir = prepare_out_dir(c);

  const DemoScenes data = make_demo_scenes(cfg.demo, mix_seed(c.seed, 0));
  const DemoResult result = run_demo(data, cfg.demo, mix_seed(c.seed, 1));

  std::ostringstream csv;
  csv << "step,supervised,consistency,pseudo_label,effective_lambda_qmt,total\n";
  for (std::size_t s = 0; s < result.log.size(); ++s) {
    const auto& l = result.log[s];
    csv << s << ',' << num(l.supervised) << ',' << num(l.consistency) << ','
        << num(l.pseudo_label) << ',' << num(l.effective_lambda_qmt) << ',' << num(l.total) << "\n";
  }
  write_text_file(dir / "loss_log.csv", csv.str());

  ordered_json report;
  report["command"] = "demo-train";
  report["seed"] = c.seed;
  report["transforms_disabled"] = no_transforms;
  report["config"] = to_json(cfg);
  report["initial"] = to_json(result.initial);
  report["final"] = to_json(result.final);
  write_json(dir / "demo_report.json", report);
  out << "demo-train: F1 " << num(result.initial.f1) << " -> " << num(result.final.f1) << "\n";
  return 0;
}

int run_plot(Common& c, const std::string& cloud_path, const std::string& quads_path,
             const std::string& gt_path, const std::string& name, std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  const fs::path dir = prepare_out_dir(c);
  const PointCloud cloud = load_cloud(cloud_path);
  const auto quads = load_quads(quads_path);
  const auto gts = gt_path.empty() ? std::vector<Quad>{} : load_quads(gt_path);

  PlotOptions opt;
  opt.title = "top-down layout: " + fs::path(quads_path).filename().string();
  ordered_json desc;
  desc["seed"] = c.seed;
  desc["cloud"] = cloud_path;
  desc["quads"] = quads_path;
  desc["gt"] = gt_path;
  desc["max_points"] = opt.max_points;
  opt.description = desc.dump();
  write_text_file(dir / name, render_layout_svg(cloud, quads, gts, opt));
  out << "plot: " << (dir / name).string() << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Room-layout quad toolkit: synthetic scenes, mixture-based quad refinement, "
               "evaluation and a mean-teacher demo"};
  app.require_subcommand(1);

  Common common;
  std::string format = "binary";
  std::string cloud_path, quads_path, pred_path, gt_path, plot_name = "layout.svg";
  bool no_transforms = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic room (PLY + quads JSON)");
  add_common(synth, common);
  synth->add_option("--format", format, "PLY encoding")->check(CLI::IsMember({"ascii", "binary"}));

  auto* refine = app.add_subcommand("refine", "Refine noisy quads against a point cloud");
  add_common(refine, common);
  refine->add_option("--cloud", cloud_path, "Input PLY")->required()->check(CLI::ExistingFile);
  refine->add_option("--quads", quads_path, "Noisy quads JSON")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Precision / recall / F1 of predicted quads");
  add_common(eval, common, false);
  eval->add_option("--pred", pred_path, "Predicted quads JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", gt_path, "Ground-truth quads JSON")->required()->check(CLI::ExistingFile);

  auto* demo = app.add_subcommand("demo-train", "Desk-scale mean-teacher run on synthetic rooms");
  add_common(demo, common);
  demo->add_flag("--no-transforms", no_transforms, "Disable FPS, flips, rotation and scaling");

  auto* plot = app.add_subcommand("plot", "Top-down SVG of a cloud and its quads");
  add_common(plot, common);
  plot->add_option("--cloud", cloud_path, "Input PLY")->required()->check(CLI::ExistingFile);
  plot->add_option("--quads", quads_path, "Quads JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("--gt", gt_path, "Optional ground-truth quads JSON")->check(CLI::ExistingFile);
  plot->add_option("--name", plot_name, "Output file name inside --out-dir");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(common, format, out);
    if (refine->parsed()) return run_refine(common, cloud_path, quads_path, out);
    if (eval->parsed()) return run_eval(common, pred_path, gt_path, out);
    if (demo->parsed()) return run_demo_train(common, no_transforms, out);
    if (plot->parsed()) return run_plot(common, cloud_path, quads_path, gt_path, plot_name, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace qlayout
