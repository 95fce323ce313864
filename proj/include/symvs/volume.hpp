#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "symvs/camera.hpp"
#include "symvs/types.hpp"

namespace symvs {

/// Uniformly spaced depth samples, ascending, samples.front() == d_min and
/// samples.back() == d_max exactly.
struct DepthHypotheses {
  double d_min = 0.0;
  double d_max = 0.0;
  int count = 0;
  std::vector<double> samples;

  /// Throws InvalidArgument unless 0 < d_min < d_max and count >= 2.
  static DepthHypotheses uniform(double d_min, double d_max, int count);
  /// d_min, d_min + interval, ... (count samples).
  static DepthHypotheses from_interval(double d_min, double interval, int count);

  double spacing() const { return (d_max - d_min) / (count - 1); }
};

enum class FeatureMode {
  kIntensity,  // luminance only, F = 1
  kGrad3,      // luminance and its forward-difference x/y gradients, F = 3
};

/// Throws UnknownMode for anything other than "intensity" or "grad3".
FeatureMode parse_feature_mode(std::string_view name);
std::string_view to_string(FeatureMode mode);

/// Fixed, non-learned per-pixel features; channels are the feature dimension.
using FeatureMap = Image;

FeatureMap extract_features(const Image& image, FeatureMode mode);
FeatureMap extract_features(const Image& image, std::string_view mode);

/// Variance-aggregated plane-sweep cost for one reference view.  cost[k] is
/// the slice for hypotheses.samples[k]; entries with valid[k] == false
/// (fewer than two contributing views) hold 0 and must not be consumed.
struct CostVolume {
  int ref_view = 0;
  DepthHypotheses hypotheses;
  std::vector<Plane> cost;
  std::vector<CountGrid> support;
  std::vector<Mask> valid;

  int depth() const { return static_cast<int>(cost.size()); }
  int rows() const { return cost.empty() ? 0 : static_cast<int>(cost[0].rows()); }
  int cols() const { return cost.empty() ? 0 : static_cast<int>(cost[0].cols()); }
};

/// For each hypothesis, warps every other view's features onto the
/// reference through the plane homography and takes the channel-averaged
/// population variance of the group {reference, warped views}.
CostVolume build_cost_volume(std::span<const CameraView> views,
                             std::span<const FeatureMap> features, int ref,
                             const DepthHypotheses& hypotheses);

/// Separable box filter over valid entries with per-window renormalization.
/// radius = (depth, rows, cols).
CostVolume smooth_cost_volume(const CostVolume& volume, const std::array<int, 3>& radius);

struct ProbabilityVolume {
  std::vector<Plane> prob;
};

struct DepthRegression {
  DepthMap depth;
  ProbabilityVolume probability;
};

/// Softmax over -cost / temperature, then the expected depth.  Pixels
/// without a valid hypothesis are invalid and have all-zero probabilities.
DepthRegression regress_depth(const CostVolume& volume, double temperature);

/// Index of the smallest valid cost per pixel, -1 where none is valid.
CountGrid argmin_hypothesis(const CostVolume& volume);

}  // namespace symvs
