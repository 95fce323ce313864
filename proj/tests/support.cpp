#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "symvs/solver.hpp"

namespace symvs::testing {

const SceneSpec& plane_spec() {
  static const SceneSpec s = plane_scene();
  return s;
}

const RenderedScene& plane_render() {
  static const RenderedScene r = render_scene(plane_spec());
  return r;
}

const SceneSpec& occluder_spec() {
  static const SceneSpec s = occluder_scene();
  return s;
}

const RenderedScene& occluder_render() {
  static const RenderedScene r = render_scene(occluder_spec());
  return r;
}

const RenderedScene& tilted_render() {
  static const RenderedScene r = render_scene(tilted_scene());
  return r;
}

Mask interior(int rows, int cols, int border) {
  Mask m = Mask::Constant(rows, cols, false);
  if (rows > 2 * border && cols > 2 * border)
    m.block(border, border, rows - 2 * border, cols - 2 * border).setConstant(true);
  return m;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double median_abs_error(const DepthMap& a, const DepthMap& gt, const Mask& region) {
  std::vector<double> e;
  for (int r = 0; r < gt.rows(); ++r)
    for (int c = 0; c < gt.cols(); ++c)
      if (region(r, c) && a.valid(r, c) && gt.valid(r, c))
        e.push_back(std::abs(a.values(r, c) - gt.values(r, c)));
  return median(std::move(e));
}

std::vector<DepthMap> add_noise(const std::vector<DepthMap>& depths, double sigma, std::uint64_t seed,
                                double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<DepthMap> out = depths;
  for (DepthMap& d : out)
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < d.cols(); ++c)
        if (d.valid(r, c)) d.values(r, c) = std::clamp(d.values(r, c) + n(rng), lo, hi);
  return out;
}

std::vector<DepthMap> scaled(const std::vector<DepthMap>& depths, double factor) {
  std::vector<DepthMap> out = depths;
  for (DepthMap& d : out) d.values *= factor;
  return out;
}

LossState make_state(const RenderedScene& scene, const std::vector<DepthMap>& depths,
                     const LossWeights& w) {
  LossState s;
  s.views = scene.views;
  s.depths = depths;
  s.weights = w;
  s.masks = compute_masks(s.views, s.depths, w.tau_occ);
  return s;
}

Eigen::Vector2d project_reproject(const CameraView& src, const CameraView& dst, double x, double y,
                                  double depth) {
  const Eigen::Vector3d ray = src.K.inverse() * Eigen::Vector3d(x, y, 1.0);
  const Eigen::Vector3d Xs = ray / ray.z() * depth;
  const Eigen::Vector3d Xw = src.R.transpose() * (Xs - src.t);
  const Eigen::Vector3d Xd = dst.R * Xw + dst.t;
  const Eigen::Vector3d h = dst.K * Xd;
  return h.head<2>() / h.z();
}

GradientCheck check_gradient(const LossState& state, int samples, double step, std::uint64_t seed,
                             int border, double tolerance) {
  CensusCache census;
  const std::vector<Plane> g = loss_gradient(state, &census);
  std::vector<std::array<int, 3>> candidates;
  for (int v = 0; v < static_cast<int>(state.depths.size()); ++v) {
    const DepthMap& d = state.depths[v];
    for (int r = border; r < d.rows() - border; ++r)
      for (int c = border; c < d.cols() - border; ++c)
        if (d.valid(r, c)) candidates.push_back({v, r, c});
  }
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  GradientCheck out;
  std::vector<DepthMap> depths = state.depths;
  auto loss = [&] {
    return evaluate_objective(state.views, depths, state.masks, state.weights, false, &census)
        .breakdown.total;
  };
  for (int k = 0; k < samples && k < static_cast<int>(candidates.size()); ++k) {
    const auto [v, r, c] = candidates[k];
    const double d0 = depths[v].values(r, c);
    depths[v].values(r, c) = d0 + step;
    const double up = loss();
    depths[v].values(r, c) = d0 - step;
    const double down = loss();
    depths[v].values(r, c) = d0;
    const double numeric = (up - down) / (2.0 * step);
    const double analytic = g[v](r, c);
    const double denom = std::max(std::abs(numeric), std::abs(analytic));
    const double rel = denom == 0.0 ? 0.0 : std::abs(numeric - analytic) / denom;
    out.max_rel_err = std::max(out.max_rel_err, rel);
    out.failed += rel >= tolerance;
    ++out.checked;
  }
  return out;
}

}  // namespace symvs::testing
