#pragma once

#include <array>
#include <span>
#include <vector>

#include "symvs/camera.hpp"
#include "symvs/consistency.hpp"
#include "symvs/photometry.hpp"
#include "symvs/volume.hpp"

namespace symvs {

struct SolverConfig {
  int max_outer_iters = 50;
  int inner_steps_per_mask_update = 5;
  double step_size = 5.0;  // largest per-pixel step, depth units
  double backtrack_factor = 0.5;
  int max_halvings = 8;
  double convergence_tol = 1e-4;  // relative loss decrease per outer iteration
  double armijo_c = 1e-4;
  DepthHypotheses hypotheses;
  double temperature = 1e-6;
  FeatureMode feature_mode = FeatureMode::kIntensity;
  std::array<int, 3> smooth_radius{0, 1, 1};
};

/// Throws InvalidArgument when a field is out of range.
void validate(const SolverConfig& config);

struct HistoryEntry {
  int iteration = 0;  // inner step counter, 0 at the start
  int outer = 0;      // mask phase
  double total = 0.0;
  LossBreakdown::Contributions parts;
};

struct SolverState : LossState {
  int iteration = 0;
  std::vector<HistoryEntry> history;
  bool diverged = false;
};

/// Plane-sweep initialization: every view is the reference once.
std::vector<DepthMap> init_depths(std::span<const CameraView> views,
                                  const DepthHypotheses& hypotheses, double temperature,
                                  FeatureMode mode = FeatureMode::kIntensity,
                                  const std::array<int, 3>& smooth_radius = {0, 1, 1});

/// d total / d depth for every view with the masks held fixed.  Census
/// distances come from `census` when present there.
std::vector<Plane> loss_gradient(const LossState& state, CensusCache* census = nullptr);

/// Alternates occlusion-mask updates with line-searched descent steps.
/// Depths stay within the hypothesis range.  Sets `diverged` instead of
/// throwing when the line search cannot make progress away from a
/// stationary point or the loss becomes non-finite; the best state found
/// is returned either way.
SolverState refine(SolverState state, const SolverConfig& config);

/// init_depths followed by refine.
SolverState run_pipeline(std::vector<CameraView> views, const LossWeights& weights,
                         const SolverConfig& config);

}  // namespace symvs
