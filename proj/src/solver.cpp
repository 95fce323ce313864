#include "symvs/solver.hpp"

#include <cmath>

#include "symvs/errors.hpp"

namespace symvs {
namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double evaluate(const SolverState& s, std::span<const DepthMap> depths) {
  return evaluate_objective(s.views, depths, s.masks, s.weights, false).breakdown.total;
}

// Sum of per-view sums, combined in sorted order.
double inner_product(const std::vector<Plane>& a, const std::vector<Plane>& b) {
  std::vector<double> per_view;
  for (std::size_t i = 0; i < a.size(); ++i) per_view.push_back((a[i] * b[i]).sum());
  return canonical_sum(std::move(per_view));
}

void record(SolverState& s, int outer) {
  const LossBreakdown bd = evaluate_objective(s.views, s.depths, s.masks, s.weights, false).breakdown;
  s.history.push_back({s.iteration, outer, bd.total, bd.contributions(s.weights)});
}

}  // namespace

void validate(const SolverConfig& c) {
  if (c.max_outer_iters < 0) throw InvalidArgument("max_outer_iters must be non-negative");
  if (c.inner_steps_per_mask_update < 1)
    throw InvalidArgument("inner_steps_per_mask_update must be positive");
  if (!(c.step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  if (!(c.backtrack_factor > 0.0 && c.backtrack_factor < 1.0))
    throw InvalidArgument("backtrack_factor must lie in (0, 1)");
  if (c.max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
  if (!(c.convergence_tol >= 0.0)) throw InvalidArgument("convergence_tol must be non-negative");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 1.0)) throw InvalidArgument("armijo_c must lie in (0, 1)");
  if (!(c.temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  for (int r : c.smooth_radius)
    if (r < 0) throw InvalidArgument("smoothing radii must be non-negative");
}

std::vector<DepthMap> init_depths(std::span<const CameraView> views,
                                  const DepthHypotheses& hypotheses, double temperature,
                                  FeatureMode mode, const std::array<int, 3>& smooth_radius) {
  if (views.size() < 2) throw TooFewViews("initialization needs at least two views");
  std::vector<FeatureMap> features;
  for (const CameraView& v : views) features.push_back(extract_features(v.image, mode));
  std::vector<DepthMap> out;
  for (int i = 0; i < static_cast<int>(views.size()); ++i) {
    const CostVolume vol = build_cost_volume(views, features, i, hypotheses);
    out.push_back(regress_depth(smooth_cost_volume(vol, smooth_radius), temperature).depth);
  }
  return out;
}

std::vector<Plane> loss_gradient(const LossState& state, CensusCache* census) {
  return evaluate_objective(state.views, state.depths, state.masks, state.weights, true, census)
      .gradient;
}

SolverState refine(SolverState state, const SolverConfig& config) {
  validate(config);
  validate(state.weights);
  const int v = static_cast<int>(state.views.size());
  if (v < 2) throw TooFewViews("refinement needs at least two views");
  if (static_cast<int>(state.depths.size()) != v)
    throw InvalidArgument("expected one depth map per view");
  const double lo = config.hypotheses.d_min, hi = config.hypotheses.d_max;
  if (!(lo > 0.0 && hi > lo)) throw InvalidArgument("solver needs a valid hypothesis range");

  auto update_masks = [&] {
    state.masks = compute_masks(state.views, state.depths, state.weights.tau_occ);
  };
  for (DepthMap& d : state.depths) d.values = d.valid.select(d.values.max(lo).min(hi), d.values);

  // Per-pixel step lengths, grown while the gradient sign persists and cut
  // when it flips.
  std::vector<Plane> step(v), last_sign(v);
  for (int i = 0; i < v; ++i) {
    step[i] = Plane::Constant(state.depths[i].rows(), state.depths[i].cols(), config.step_size);
    last_sign[i] = Plane::Zero(state.depths[i].rows(), state.depths[i].cols());
  }
  const double min_step = config.step_size * 1e-6;

  for (int outer = 0; outer < config.max_outer_iters; ++outer) {
    update_masks();
    record(state, outer);
    double loss = state.history.back().total;
    const double phase_start = loss;
    if (!std::isfinite(loss)) {
      state.diverged = true;
      break;
    }
    bool any_accepted = false;
    bool stalled_away_from_stationary = false;

    for (int inner = 0; inner < config.inner_steps_per_mask_update; ++inner) {
      const std::vector<Plane> g = loss_gradient(state);
      std::vector<Plane> dir(v);
      for (int i = 0; i < v; ++i) {
        const Plane sg = g[i].unaryExpr([](double x) { return sign(x); });
        dir[i] = state.depths[i].valid.select(-sg * step[i], 0.0);
      }

      double alpha = 1.0;
      bool accepted = false;
      double last_pred = 0.0;
      std::vector<DepthMap> trial = state.depths;
      for (int h = 0; h <= config.max_halvings; ++h, alpha *= config.backtrack_factor) {
        std::vector<Plane> delta(v);
        for (int i = 0; i < v; ++i) {
          const DepthMap& d = state.depths[i];
          trial[i].values = d.valid.select((d.values + alpha * dir[i]).max(lo).min(hi), d.values);
          delta[i] = trial[i].values - d.values;
        }
        const double pred = inner_product(g, delta);
        last_pred = pred;
        if (pred == 0.0) break;
        const double t = evaluate(state, trial);
        if (std::isfinite(t) && t <= loss + config.armijo_c * pred) {
          accepted = true;
          loss = t;
          break;
        }
      }

      ++state.iteration;
      if (accepted) {
        any_accepted = true;
        for (int i = 0; i < v; ++i) {
          const Plane sg = g[i].unaryExpr([](double x) { return sign(x); });
          const Plane agree = sg * last_sign[i];
          step[i] = (agree > 0.0).select((step[i] * 1.2).min(config.step_size),
                                         (agree < 0.0).select((step[i] * 0.5).max(min_step), step[i]));
          last_sign[i] = sg;
        }
        state.depths = std::move(trial);
        record(state, outer);
      } else {
        for (Plane& s : step) s = (s * config.backtrack_factor).max(min_step);
        if (-config.armijo_c * last_pred > config.convergence_tol * std::abs(loss))
          stalled_away_from_stationary = true;
      }
    }

    if (!any_accepted && stalled_away_from_stationary) {
      state.diverged = true;
      break;
    }
    const double decrease = (phase_start - loss) / std::max(std::abs(phase_start), 1e-300);
    if (decrease < config.convergence_tol) break;
  }
  update_masks();
  return state;
}

SolverState run_pipeline(std::vector<CameraView> views, const LossWeights& weights,
                         const SolverConfig& config) {
  validate(config);
  validate(weights);
  SolverState state;
  state.depths = init_depths(views, config.hypotheses, config.temperature, config.feature_mode,
                             config.smooth_radius);
  state.views = std::move(views);
  state.weights = weights;
  return refine(std::move(state), config);
}

}  // namespace symvs
