// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support.hpp"
#include "symvs/config.hpp"
#include "symvs/consistency.hpp"
#include "symvs/fusion.hpp"
#include "symvs/io.hpp"
#include "symvs/metrics.hpp"
#include "symvs/solver.hpp"
#include "symvs/volume.hpp"

using namespace symvs;
using namespace symvs::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Mask covisible(const RenderedScene& sc, int ref) {
  Mask m = Mask::Constant(sc.gt_depths[ref].rows(), sc.gt_depths[ref].cols(), true);
  for (int j = 0; j < static_cast<int>(sc.views.size()); ++j)
    if (j != ref) m = m && sc.in_frame.at({ref, j});
  return m;
}

// Median |d - gt| pooled over every view.
double pooled_median_error(const std::vector<DepthMap>& d, const std::vector<DepthMap>& gt) {
  std::vector<double> e;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int r = 0; r < gt[i].rows(); ++r)
      for (int c = 0; c < gt[i].cols(); ++c)
        if (d[i].valid(r, c) && gt[i].valid(r, c)) e.push_back(std::abs(d[i].values(r, c) - gt[i].values(r, c)));
  return median(std::move(e));
}

Outcome hyperparameters() {
  const LossWeights w;
  const bool ok = w.lambda1 == 0.5 && w.lambda2 == 0.8 && w.lambda3 == 0.5 && w.lambda4 == 0.2 &&
                  w.lambda5 == 0.3 && w.lambda6 == 0.3 && w.alpha1 == 0.5 && w.alpha2 == 0.5 &&
                  w.omega_u == 0.8 && w.omega_s == 0.1 && w.tau_occ == 5.0;
  // the defaults also survive a run-config round trip
  const RunConfig rc = parse_run_config(format_run_config(RunConfig{}));
  const bool round = rc.weights.lambda4 == 0.2 && rc.weights.omega_s == 0.1 && rc.weights.tau_occ == 5.0;
  return {ok && round, fmt("lambda=(%g,%g,%g,%g) l5=%g l6=%g a=(%g,%g) wu=%g ws=%g tau=%g", w.lambda1,
                           w.lambda2, w.lambda3, w.lambda4, w.lambda5, w.lambda6, w.alpha1, w.alpha2,
                           w.omega_u, w.omega_s, w.tau_occ)};
}

Outcome gradient_oracle() {
  const auto& sc = plane_render();
  const LossState s = make_state(sc, add_noise(sc.gt_depths, 10.0, 12, 450.0, 765.0));
  const GradientCheck g = check_gradient(s, 100, 1e-3, 13, 2, 1e-3);
  return {g.checked >= 100 && g.failed == 0,
          fmt("%d pixels, %d above 1e-3, max relative error %.2e", g.checked, g.failed, g.max_rel_err)};
}

Outcome cost_volume() {
  const auto& sc = plane_render();
  const DepthHypotheses hyp = plane_spec().depth_range.hypotheses();
  const int truth = 30;
  if (hyp.samples.size() != 64 || hyp.samples[truth] != 600.0) return {false, "600 is not a hypothesis"};
  const SolverConfig cfg;
  const auto feats = [&] {
    std::vector<FeatureMap> f;
    for (const CameraView& v : sc.views) f.push_back(extract_features(v.image, cfg.feature_mode));
    return f;
  }();
  double worst_hit = 1.0, worst_median = 0.0;
  for (int ref = 0; ref < 3; ++ref) {
    const CostVolume raw = build_cost_volume(sc.views, feats, ref, hyp);
    const CountGrid idx = argmin_hypothesis(raw);
    const Mask region = covisible(sc, ref);
    int total = 0, hits = 0;
    for (int r = 0; r < idx.rows(); ++r)
      for (int c = 0; c < idx.cols(); ++c)
        if (region(r, c)) {
          ++total;
          hits += idx(r, c) == truth;
        }
    worst_hit = std::min(worst_hit, double(hits) / total);
    const DepthRegression reg = regress_depth(smooth_cost_volume(raw, cfg.smooth_radius), cfg.temperature);
    worst_median = std::max(worst_median, median_abs_error(reg.depth, sc.gt_depths[ref], region && reg.depth.valid));
  }
  return {worst_hit >= 0.98 && worst_median < hyp.spacing(),
          fmt("argmin hit rate (worst view) %.4f, regressed median error (worst view) %.3g, spacing %g", worst_hit,
              worst_median, hyp.spacing())};
}

Outcome gt_optimality() {
  const auto& sc = plane_render();
  const double gt = total_loss(make_state(sc, sc.gt_depths)).total;
  bool ok = true;
  std::string detail = fmt("GT %.6g;", gt);
  for (double f : {0.8, 0.9, 1.1, 1.2}) {
    const double v = total_loss(make_state(sc, scaled(sc.gt_depths, f))).total;
    ok = ok && gt < v;
    detail += fmt(" x%.1f %.6g", f, v);
  }
  return {ok, detail};
}

Outcome refinement() {
  const auto& sc = plane_render();
  SolverConfig cfg;
  cfg.hypotheses = plane_spec().depth_range.hypotheses();
  cfg.max_outer_iters = 50;
  const double sigma = 2.0 * cfg.hypotheses.spacing();
  SolverState start;
  start.views = sc.views;
  start.depths = add_noise(sc.gt_depths, sigma, 42, cfg.hypotheses.d_min, cfg.hypotheses.d_max);
  const double before = pooled_median_error(start.depths, sc.gt_depths);
  const auto t0 = std::chrono::steady_clock::now();
  const SolverState out = refine(start, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double after = pooled_median_error(out.depths, sc.gt_depths);
  int violations = 0, outer = 0;
  for (std::size_t k = 1; k < out.history.size(); ++k) {
    outer = std::max(outer, out.history[k].outer);
    if (out.history[k].outer == out.history[k - 1].outer && out.history[k].total > out.history[k - 1].total)
      ++violations;
  }
  return {!out.diverged && after <= 0.5 * before && violations == 0 && outer <= 50 && secs < 300.0,
          fmt("median error %.3f -> %.3f (%.1f%% reduction), %d outer iterations, %d increases within a phase, %.1f s",
              before, after, 100.0 * (1.0 - after / before), outer + 1, violations, secs)};
}

Outcome occlusion() {
  const auto& sc = occluder_render();
  double worst = 1.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const OcclusionMask m = occlusion_mask(sc.gt_depths[i], sc.gt_depths[j], sc.views[i], sc.views[j],
                                             LossWeights{}.tau_occ);
      const Mask& inf = sc.in_frame.at({i, j});
      const Mask predicted = inf && !m.valid;
      const Mask band = inf && !sc.visibility.at({i, j});
      const int uni = (predicted || band).count();
      const double jac = uni == 0 ? 1.0 : double((predicted && band).count()) / uni;
      worst = std::min(worst, jac);
    }
  return {worst >= 0.95, fmt("worst Jaccard over ordered pairs %.4f", worst)};
}

Outcome symmetry() {
  const auto& sc = tilted_render();
  SolverConfig cfg;
  cfg.hypotheses = DepthHypotheses::from_interval(400.0, 5.0, 64);
  cfg.max_outer_iters = 10;
  const SolverState a = run_pipeline(sc.views, LossWeights{}, cfg);
  double worst = 0.0;
  bool masks = true;
  const std::vector<std::array<int, 3>> perms{{1, 2, 0}, {2, 1, 0}};
  for (const auto& perm : perms) {
    const SolverState p = run_pipeline({sc.views[perm[0]], sc.views[perm[1]], sc.views[perm[2]]}, LossWeights{}, cfg);
    for (int i = 0; i < 3; ++i) {
      masks = masks && (p.depths[i].valid == a.depths[perm[i]].valid).all();
      worst = std::max(worst, (p.depths[i].values - a.depths[perm[i]].values).abs().maxCoeff());
    }
  }
  return {masks && worst < 1e-12,
          fmt("2 permutations, max |difference| %.3g, validity identical: %s", worst, masks ? "yes" : "no")};
}

Outcome metric_cross_check() {
  const double overall = overall_score(0.760, 0.515);
  // A cloud pair with accuracy mean 0.760 and completeness mean 0.515:
  // one mutual pair 78.28 apart, plus 102 predicted and 151 reference
  // points stacked far away at zero distance (78.28/103, 78.28/152).
  PointCloud pred, gt;
  pred.points.emplace_back(0.0, 0.0, 0.0);
  gt.points.emplace_back(78.28, 0.0, 0.0);
  for (int k = 0; k < 102; ++k) pred.points.emplace_back(1000.0, 0.0, 0.0);
  for (int k = 0; k < 151; ++k) gt.points.emplace_back(1000.0, 0.0, 0.0);
  const CloudMetrics m = cloud_metrics(pred, gt, 1.0);
  const bool ok = std::abs(overall - 0.6375) < 1e-15 && std::abs(overall - 0.637) <= 0.0005 + 1e-12 &&
                  std::abs(m.acc_mean - 0.760) < 1e-12 && std::abs(m.comp_mean - 0.515) < 1e-12 &&
                  std::abs(m.overall - 0.6375) < 1e-12;
  return {ok, fmt("overall(0.760, 0.515) = %.6g; cloud_metrics acc %.6g comp %.6g overall %.6g", overall,
                  m.acc_mean, m.comp_mean, m.overall)};
}

Outcome delta_boundary() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1e4);
  Plane g(48, 64);
  for (int i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
  const DepthMetrics m = depth_metrics(DepthMap::from_values(1.25 * g), DepthMap::from_values(g));
  return {m.delta1 == 0.0 && m.delta2 == 1.0 && m.delta3 == 1.0,
          fmt("delta1 %g delta2 %g delta3 %g over %d pixels", m.delta1, m.delta2, m.delta3, m.n_evaluated)};
}

Outcome fusion_round_trip() {
  const auto& sc = plane_render();
  const double spacing = plane_spec().depth_range.interval;
  const int min_views = 2;
  const auto filtered = filter_consistent(sc.gt_depths, sc.views, spacing, min_views);
  const PointCloud cloud = depths_to_cloud(filtered, sc.views);
  double off_plane = 0.0;
  for (const auto& p : cloud.points) off_plane = std::max(off_plane, std::abs(p.z() - 600.0));

  // Reference cloud straight from the plane equation: pixel rays of each
  // view meeting z = 600, kept when the point is inside min_views + 1 views.
  PointCloud ref;
  for (int i = 0; i < 3; ++i) {
    const CameraView& v = sc.views[i];
    const Mask seen = covisible(sc, i);
    const Eigen::Matrix3d Kinv = v.K.inverse();
    const Eigen::Vector3d centre = -v.R.transpose() * v.t;
    for (int r = 0; r < seen.rows(); ++r)
      for (int c = 0; c < seen.cols(); ++c) {
        if (!seen(r, c)) continue;
        const Eigen::Vector3d dir = v.R.transpose() * (Kinv * Eigen::Vector3d(c, r, 1.0));
        ref.points.push_back(centre + dir * ((600.0 - centre.z()) / dir.z()));
      }
  }
  if (cloud.size() == 0 || ref.size() == 0) return {false, "empty cloud"};
  const CloudMetrics m = cloud_metrics(cloud, ref, spacing);
  return {off_plane < 1e-6 && m.f_score == 100.0,
          fmt("%zu fused points, max distance to plane %.2e, f_score %g at threshold %g (%zu reference points)",
              cloud.size(), off_plane, m.f_score, spacing, ref.size())};
}

Outcome term_counts() {
  const auto& sc = plane_render();
  std::string detail;
  bool ok = true;
  const int expected[2][3] = {{1, 1, 0}, {3, 3, 3}};
  for (int v : {2, 3}) {
    LossState s;
    s.views.assign(sc.views.begin(), sc.views.begin() + v);
    s.depths.assign(sc.gt_depths.begin(), sc.gt_depths.begin() + v);
    s.masks = compute_masks(s.views, s.depths, s.weights.tau_occ);
    const LossBreakdown b = total_loss(s);
    const int got[3] = {int(b.synthesis.size()), int(b.cross_view.size()), int(b.brightness.size())};
    for (int k = 0; k < 3; ++k) ok = ok && got[k] == expected[v - 2][k];
    detail += fmt("%sv=%d: %d/%d/%d", detail.empty() ? "" : "; ", v, got[0], got[1], got[2]);
  }
  return {ok, detail};
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "symvs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// Relative path -> contents of every regular file below dir.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), dir).string(), read_file(e.path()));
  std::sort(files.begin(), files.end());
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("symvs_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const fs::path scene = fs::path(SYMVS_SOURCE_DIR) / "scenes" / "occluder.cfg";
  std::vector<std::string> stdout_of_run;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    std::string text, all;
    const fs::path cfg = d / "short.cfg";
    write_file(cfg, "max_outer_iters = 3\n");
    if (cli({"synth", scene.string(), (d / "bundle").string()}) != 0 ||
        cli({"sweep", (d / "bundle").string(), (d / "sweep").string()}, &text) != 0 ||
        cli({"optimize", (d / "bundle").string(), (d / "opt").string(), "--config", cfg.string()}, &text) != 0)
      return {false, "a CLI step failed"};
    all += text;
    if (cli({"fuse", (d / "opt" / "depth").string(), (d / "bundle").string(), (d / "cloud.ply").string()}, &text) != 0)
      return {false, "fuse failed"};
    all += text;
    if (cli({"eval-depth", (d / "opt" / "depth").string(), (d / "bundle" / "gt").string()}, &text) != 0)
      return {false, "eval-depth failed"};
    all += text;
    stdout_of_run.push_back(all);
  }
  const auto a = snapshot(root / "a"), b = snapshot(root / "b");
  bool same = a.size() == b.size();
  std::string first_diff;
  for (std::size_t k = 0; same && k < a.size(); ++k)
    if (a[k] != b[k]) {
      same = false;
      first_diff = a[k].first;
    }
  fs::remove_all(root);
  const bool out_same = stdout_of_run[0] == stdout_of_run[1];
  return {same && out_same && a.size() > 10,
          fmt("%zu artifacts compared byte for byte%s%s, reports %s", a.size(), same ? "" : ", first difference in ",
              first_diff.c_str(), out_same ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "hyperparameter defaults", hyperparameters},
      {2, "gradient vs finite differences", gradient_oracle},
      {3, "cost volume on the plane scene", cost_volume},
      {4, "ground-truth optimality", gt_optimality},
      {5, "refinement efficacy", refinement},
      {6, "occlusion masks", occlusion},
      {7, "view permutation symmetry", symmetry},
      {8, "overall metric cross-check", metric_cross_check},
      {9, "strict delta boundary", delta_boundary},
      {10, "fusion round trip", fusion_round_trip},
      {11, "term counts", term_counts},
      {12, "CLI determinism", determinism},
  };
  // runtime limits per criterion, seconds (0: none)
  const double limit[13] = {0, 0, 60, 30, 0, 300, 0, 0, 0, 0, 0, 0, 0};
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit[c.number] > 0 && secs >= limit[c.number]) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s limit]", limit[c.number]);
    }
    failed += !o.pass;
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.number, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
