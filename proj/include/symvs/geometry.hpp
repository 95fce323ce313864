#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "symvs/camera.hpp"
#include "symvs/types.hpp"

namespace symvs {

/// Homography induced by the fronto-parallel plane z = depth in `src`'s
/// camera frame, mapping `src` pixels to `dst` pixels.  Scaled so that
/// H(2,2) = 1.  Throws NonFiniteResult for depth <= 0 or a degenerate result.
Eigen::Matrix3d plane_homography(const CameraView& src, const CameraView& dst, double depth);

/// Same homography without the final scale normalization; the third row
/// keeps the sign of the point depth in `dst` (depth-scaled).
Eigen::Matrix3d plane_homography_unnormalized(const CameraView& src, const CameraView& dst,
                                              double depth);

/// Continuous source coordinates for every pixel of a target grid.
struct WarpField {
  Plane x;
  Plane y;
  Mask in_bounds;

  int rows() const { return static_cast<int>(x.rows()); }
  int cols() const { return static_cast<int>(x.cols()); }
};

/// Builds a field over a source of size rows×cols; in_bounds is derived
/// from the coordinates (non-finite coordinates are out of bounds).
WarpField make_warp_field(Plane x, Plane y, int source_rows, int source_cols);

/// Identity field on a rows×cols grid.
WarpField identity_field(int rows, int cols);

/// Image resampled on a target grid with per-pixel validity.
struct Sampled {
  Image image;
  Mask valid;
};

/// Bilinear resampling.  Out-of-bounds outputs are 0 and invalid.  Field
/// and image must have the same grid size.
Sampled bilinear_sample(const Image& image, const WarpField& field);

/// As above for a partially valid source: an output is valid only if every
/// tap with non-zero weight is valid in `image_valid`.
Sampled bilinear_sample(const Image& image, const Mask& image_valid, const WarpField& field);

/// Partial derivatives of the sampled image with respect to the field
/// coordinates, per channel.  Zero where the field is out of bounds.
struct SampleJacobian {
  Image d_dx;
  Image d_dy;
};
SampleJacobian bilinear_sample_jacobian(const Image& image, const WarpField& field);

/// Vector-Jacobian product of bilinear_sample.  Adds the coordinate
/// gradients into grad_x / grad_y and, when grad_image is non-null, scatters
/// the image gradient into it.  Only pixels with out_valid set contribute.
void bilinear_sample_backward(const Image& image, const WarpField& field, const Mask& out_valid,
                              const Image& grad_out, Plane& grad_x, Plane& grad_y,
                              Image* grad_image);

/// Where each pixel of `target`, placed at target_depth, lands in `source`.
/// Pixels with invalid depth or non-positive depth in `source` get
/// non-finite coordinates and are therefore out of bounds.
struct Transfer {
  WarpField field;
  Plane dx_ddepth;
  Plane dy_ddepth;

  const Mask& valid() const { return field.in_bounds; }
};
Transfer compute_transfer(const DepthMap& target_depth, const CameraView& target,
                          const CameraView& source);

/// Inverse warping of source.image into the target view using target_depth.
Sampled synthesize_view(const DepthMap& target_depth, const CameraView& source,
                        const CameraView& target);

/// Source depth resampled into the target view and re-expressed as depth
/// in the target camera.  Keeps the pieces needed by the adjoint:
///   result = sampled * gamma + offset,  gamma = g · [x, y, 1].
struct DepthWarp {
  DepthMap result;
  Plane sampled;
  Plane gamma;
  Eigen::Vector3d g;
  double offset = 0.0;
};
DepthWarp warp_depth_detailed(const DepthMap& source_depth, const Transfer& transfer,
                              const CameraView& source, const CameraView& target);

DepthMap warp_depth(const DepthMap& source_depth, const DepthMap& target_depth,
                    const CameraView& source, const CameraView& target);

namespace detail {

struct Taps {
  int x0, x1, y0, y1;
  double fx, fy;
};

inline Taps taps_at(double x, double y, int cols, int rows) {
  Taps t;
  t.x0 = std::clamp(static_cast<int>(std::floor(x)), 0, std::max(cols - 2, 0));
  t.y0 = std::clamp(static_cast<int>(std::floor(y)), 0, std::max(rows - 2, 0));
  t.x1 = std::min(t.x0 + 1, cols - 1);
  t.y1 = std::min(t.y0 + 1, rows - 1);
  t.fx = x - t.x0;
  t.fy = y - t.y0;
  return t;
}

inline double interpolate(const Plane& p, const Taps& t) {
  return (1.0 - t.fy) * ((1.0 - t.fx) * p(t.y0, t.x0) + t.fx * p(t.y0, t.x1)) +
         t.fy * ((1.0 - t.fx) * p(t.y1, t.x0) + t.fx * p(t.y1, t.x1));
}

inline bool taps_valid(const Mask& m, const Taps& t) {
  const bool wx0 = t.fx < 1.0, wx1 = t.fx > 0.0, wy0 = t.fy < 1.0, wy1 = t.fy > 0.0;
  return (!(wx0 && wy0) || m(t.y0, t.x0)) && (!(wx1 && wy0) || m(t.y0, t.x1)) &&
         (!(wx0 && wy1) || m(t.y1, t.x0)) && (!(wx1 && wy1) || m(t.y1, t.x1));
}

inline void interpolate_gradient(const Plane& p, const Taps& t, double& ddx, double& ddy) {
  ddx = (1.0 - t.fy) * (p(t.y0, t.x1) - p(t.y0, t.x0)) + t.fy * (p(t.y1, t.x1) - p(t.y1, t.x0));
  ddy = (1.0 - t.fx) * (p(t.y1, t.x0) - p(t.y0, t.x0)) + t.fx * (p(t.y1, t.x1) - p(t.y0, t.x1));
}

inline void scatter(Plane& p, const Taps& t, double g) {
  p(t.y0, t.x0) += g * (1.0 - t.fx) * (1.0 - t.fy);
  p(t.y0, t.x1) += g * t.fx * (1.0 - t.fy);
  p(t.y1, t.x0) += g * (1.0 - t.fx) * t.fy;
  p(t.y1, t.x1) += g * t.fx * t.fy;
}

}  // namespace detail
}  // namespace symvs
