#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "symvs/config.hpp"
#include "symvs/errors.hpp"
#include "symvs/fusion.hpp"
#include "symvs/io.hpp"
#include "symvs/metrics.hpp"
#include "symvs/scenegen.hpp"
#include "symvs/solver.hpp"

namespace symvs {
namespace {

RunConfig bundle_config(const Bundle& b, const fs::path& override_path) {
  if (!override_path.empty()) return read_run_config(override_path);
  if (!b.run_config.empty()) return read_run_config(b.run_config);
  return RunConfig{};
}

DepthHypotheses bundle_hypotheses(const Bundle& b, int count) {
  const CameraFile& c = b.cameras.front();
  if (!(c.depth_min > 0.0) || !(c.depth_interval > 0.0))
    throw InvalidArgument("camera file lacks a usable depth range (depth_min depth_interval)");
  return DepthHypotheses::from_interval(c.depth_min, c.depth_interval, count);
}

// Stacks every view's grid vertically so one report covers all views.
DepthMap stack(const std::vector<DepthMap>& maps) {
  Eigen::Index rows = 0;
  for (const DepthMap& m : maps) rows += m.rows();
  const Eigen::Index cols = maps.front().cols();
  DepthMap out(Plane(rows, cols), Mask(rows, cols));
  Eigen::Index at = 0;
  for (const DepthMap& m : maps) {
    if (m.cols() != cols) throw ShapeMismatch("depth maps differ in width");
    out.values.middleRows(at, m.rows()) = m.values;
    out.valid.middleRows(at, m.rows()) = m.valid;
    at += m.rows();
  }
  return out;
}

std::string loss_csv(const SolverState& s) {
  std::string out = "iter,total,Lu,Ls,Lm,Ld,Lb\n";
  char buf[256];
  for (const HistoryEntry& h : s.history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.iteration, h.total,
                  h.parts.unary, h.parts.smoothness, h.parts.image, h.parts.depth, h.parts.brightness);
    out += buf;
  }
  return out;
}

int cmd_synth(const std::string& scene_path, const std::string& out_dir, std::ostream& out) {
  const SceneSpec spec = read_scene(scene_path);
  const RenderedScene scene = render_scene(spec);
  Bundle b;
  b.views = scene.views;
  b.gt_depths = scene.gt_depths;
  for (std::size_t i = 0; i < b.views.size(); ++i) {
    CameraFile cf;
    cf.depth_min = spec.depth_range.d_min;
    cf.depth_interval = spec.depth_range.interval;
    b.cameras.push_back(cf);
  }
  write_bundle(out_dir, b);
  RunConfig rc;
  rc.hyp_count = spec.depth_range.count;
  write_file(fs::path(out_dir) / "run.cfg", format_run_config(rc));
  out << "wrote " << b.views.size() << " views to " << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& bundle_dir, const std::string& out_dir, int hyp_count,
              double temperature, std::ostream& out) {
  const Bundle b = read_bundle(bundle_dir);
  RunConfig rc = bundle_config(b, {});
  if (hyp_count > 0) rc.hyp_count = hyp_count;
  if (temperature > 0.0) rc.solver.temperature = temperature;
  const auto depths = init_depths(b.views, bundle_hypotheses(b, rc.hyp_count), rc.solver.temperature,
                                  rc.solver.feature_mode, rc.solver.smooth_radius);
  write_depth_dir(fs::path(out_dir) / "depth", depths);
  out << "wrote " << depths.size() << " depth maps to " << (fs::path(out_dir) / "depth").string() << "\n";
  return 0;
}

int cmd_optimize(const std::string& bundle_dir, const std::string& out_dir,
                 const std::string& config_path, std::ostream& out, std::ostream& err) {
  const Bundle b = read_bundle(bundle_dir);
  RunConfig rc = bundle_config(b, config_path);
  rc.solver.hypotheses = bundle_hypotheses(b, rc.hyp_count);
  const SolverState s = run_pipeline(b.views, rc.weights, rc.solver);
  const fs::path dir(out_dir);
  write_depth_dir(dir / "depth", s.depths);
  for (const auto& [pair, m] : s.masks)
    write_mask_pgm(dir / "masks" / ("mask_" + std::to_string(pair.first) + "_" +
                                    std::to_string(pair.second) + ".pgm"),
                   m.valid);
  write_file(dir / "loss.csv", loss_csv(s));
  write_file(dir / "loss_report.txt", total_loss(s).report());
  out << "iterations=" << s.iteration << "\n";
  if (!s.history.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.history.back().total);
    out << "final_total=" << buf << "\n";
  }
  if (s.diverged) {
    err << "error: the solver diverged; wrote the best state found\n";
    return 2;
  }
  return 0;
}

int cmd_fuse(const std::string& depth_dir, const std::string& bundle_dir, const std::string& out_ply,
             double tau, int min_views, bool ascii, std::ostream& out) {
  const Bundle b = read_bundle(bundle_dir);
  const auto depths = read_depth_dir(depth_dir);
  if (depths.size() != b.views.size())
    throw InvalidArgument("found " + std::to_string(depths.size()) + " depth maps for " +
                          std::to_string(b.views.size()) + " views");
  if (!(tau > 0.0)) tau = b.cameras.front().depth_interval;
  const auto filtered = filter_consistent(depths, b.views, tau, min_views);
  const PointCloud cloud = depths_to_cloud(filtered, b.views);
  write_ply(out_ply, cloud, ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  out << "points=" << cloud.size() << "\n";
  return 0;
}

int cmd_eval_depth(const std::string& pred_dir, const std::string& gt_dir, std::ostream& out) {
  const auto pred = read_depth_dir(pred_dir);
  const auto gt = read_depth_dir(gt_dir);
  if (pred.size() != gt.size())
    throw InvalidArgument("prediction has " + std::to_string(pred.size()) + " maps, ground truth " +
                          std::to_string(gt.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out << "[view " << i << "]\n" << report(depth_metrics(pred[i], gt[i]));
  }
  out << "[all]\n" << report(depth_metrics(stack(pred), stack(gt)));
  return 0;
}

int cmd_eval_cloud(const std::string& pred, const std::string& gt, double threshold,
                   std::ostream& out) {
  out << report(cloud_metrics(read_ply(pred), read_ply(gt), threshold));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetric multi-view stereo: synthesis, plane sweep, refinement, fusion, evaluation"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string a, b_arg, c_arg, config_path;
  int hyp_count = 0, min_views = 2;
  double temperature = 0.0, tau = 0.0, threshold = 1.0;
  bool ascii = false;

  auto* synth = app.add_subcommand("synth", "Render a scene description into a bundle");
  synth->add_option("scene", a, "Scene file")->required();
  synth->add_option("out_dir", b_arg, "Bundle directory to write")->required();

  auto* sweep = app.add_subcommand("sweep", "Plane-sweep initialization only");
  sweep->add_option("bundle", a, "Bundle directory")->required();
  sweep->add_option("out_dir", b_arg, "Output directory")->required();
  sweep->add_option("--hyp-count", hyp_count, "Number of depth hypotheses")->check(CLI::Range(2, 100000));
  sweep->add_option("--temperature", temperature, "Softmax temperature")->check(CLI::PositiveNumber);

  auto* optimize = app.add_subcommand("optimize", "Initialize and refine all depth maps");
  optimize->add_option("bundle", a, "Bundle directory")->required();
  optimize->add_option("out_dir", b_arg, "Output directory")->required();
  optimize->add_option("--config", config_path, "Run configuration (default: bundle run.cfg)");

  auto* fuse = app.add_subcommand("fuse", "Fuse consistent depths into a point cloud");
  fuse->add_option("depth_dir", a, "Directory with 00000000.pfm, ...")->required();
  fuse->add_option("bundle", b_arg, "Bundle directory")->required();
  fuse->add_option("out_ply", c_arg, "Output PLY")->required();
  fuse->add_option("--tau", tau, "Agreement threshold (default: one depth interval)")
      ->check(CLI::PositiveNumber);
  fuse->add_option("--min-views", min_views, "Agreeing views required")->check(CLI::PositiveNumber);
  fuse->add_flag("--ascii", ascii, "Write ASCII instead of binary PLY");

  auto* eval_depth = app.add_subcommand("eval-depth", "Depth error metrics");
  eval_depth->add_option("pred_dir", a, "Predicted depth directory")->required();
  eval_depth->add_option("gt_dir", b_arg, "Ground-truth depth directory")->required();

  auto* eval_cloud = app.add_subcommand("eval-cloud", "Point-cloud accuracy and completeness");
  eval_cloud->add_option("pred", a, "Predicted PLY")->required();
  eval_cloud->add_option("gt", b_arg, "Ground-truth PLY")->required();
  eval_cloud->add_option("--threshold", threshold, "Distance threshold")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(a, b_arg, out);
    if (*sweep) return cmd_sweep(a, b_arg, hyp_count, temperature, out);
    if (*optimize) return cmd_optimize(a, b_arg, config_path, out, err);
    if (*fuse) return cmd_fuse(a, b_arg, c_arg, tau, min_views, ascii, out);
    if (*eval_depth) return cmd_eval_depth(a, b_arg, out);
    if (*eval_cloud) return cmd_eval_cloud(a, b_arg, threshold, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace symvs
