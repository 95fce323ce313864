#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "symvs/consistency.hpp"
#include "symvs/scenegen.hpp"
#include "symvs/types.hpp"

namespace symvs::testing {

// Rendered once per process.
const SceneSpec& plane_spec();
const RenderedScene& plane_render();
const SceneSpec& occluder_spec();
const RenderedScene& occluder_render();
const RenderedScene& tilted_render();

Mask interior(int rows, int cols, int border);

double median(std::vector<double> v);

// Median |a - gt| over pixels valid in both and inside region.
double median_abs_error(const DepthMap& a, const DepthMap& gt, const Mask& region);

// Adds N(0, sigma) per pixel, clamped to [lo, hi].
std::vector<DepthMap> add_noise(const std::vector<DepthMap>& depths, double sigma, std::uint64_t seed,
                                double lo, double hi);

std::vector<DepthMap> scaled(const std::vector<DepthMap>& depths, double factor);

// Views and depths with masks computed at those depths.
LossState make_state(const RenderedScene& scene, const std::vector<DepthMap>& depths,
                     const LossWeights& w = {});

// Reference pixel transfer: backproject, rigid transform, project.
Eigen::Vector2d project_reproject(const CameraView& src, const CameraView& dst, double x, double y,
                                  double depth);

struct GradientCheck {
  int checked = 0;
  int failed = 0;
  double max_rel_err = 0.0;
};

// Central differences of the objective (masks and census frozen) against
// loss_gradient at random valid pixels at least `border` away from the edge.
GradientCheck check_gradient(const LossState& state, int samples, double step, std::uint64_t seed,
                             int border, double tolerance);

}  // namespace symvs::testing
