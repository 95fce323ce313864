#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "symvs/camera.hpp"
#include "symvs/types.hpp"

namespace symvs {

/// World-frame points with optional per-point RGB in [0, 1].
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;  // empty or one per point

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }
};

/// A pixel of view i survives when at least min_views other views j give
/// |D_i - D'_{j->i}| <= tau_fuse; its value becomes the mean of D_i and
/// the agreeing D'_{j->i}.
std::vector<DepthMap> filter_consistent(std::span<const DepthMap> depths,
                                        std::span<const CameraView> views, double tau_fuse,
                                        int min_views);

/// Per-pixel count of other views that agree within tau_fuse.
std::vector<CountGrid> agreement_counts(std::span<const DepthMap> depths,
                                        std::span<const CameraView> views, double tau_fuse);

/// Back-projects every valid pixel, views in order, pixels row-major, with
/// the view's colour (first three channels, or grey for one channel).
PointCloud depths_to_cloud(std::span<const DepthMap> depths, std::span<const CameraView> views);

}  // namespace symvs
