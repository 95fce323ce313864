#include "symvs/camera.hpp"

#include <cmath>
#include <string>

#include "symvs/errors.hpp"

namespace symvs {

void validate(const CameraView& view) {
  const Eigen::Matrix3d& K = view.K;
  if (!K.allFinite() || !view.R.allFinite() || !view.t.allFinite())
    throw InvalidCamera("camera has non-finite entries");
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0)
    throw InvalidCamera("intrinsics must be upper triangular");
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0))
    throw InvalidCamera("focal entries must be positive");
  if (K(2, 2) != 1.0) throw InvalidCamera("intrinsics must have K(2,2) = 1");
  const double orth = (view.R.transpose() * view.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orth > 1e-9) throw InvalidCamera("rotation is not orthonormal");
  if (std::abs(view.R.determinant() - 1.0) > 1e-9)
    throw InvalidCamera("rotation determinant is not +1");
}

void validate_same_shape(std::span<const CameraView> views) {
  for (const CameraView& v : views) {
    if (!v.image.same_shape(views.front().image))
      throw ShapeMismatch("all views must share image height, width and channel count");
  }
}

Eigen::Matrix3d inverse_intrinsics(const Eigen::Matrix3d& K) {
  const double fx = K(0, 0), s = K(0, 1), cx = K(0, 2);
  const double fy = K(1, 1), cy = K(1, 2);
  Eigen::Matrix3d inv;
  inv << 1.0 / fx, -s / (fx * fy), (s * cy - cx * fy) / (fx * fy),
         0.0, 1.0 / fy, -cy / fy,
         0.0, 0.0, 1.0;
  return inv;
}

RelativePose relative_pose(const CameraView& from, const CameraView& to) {
  if (from.R == to.R && from.t == to.t)
    return {Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()};
  RelativePose rel;
  rel.R = to.R * from.R.transpose();
  rel.t = to.t - rel.R * from.t;
  return rel;
}

PixelTransfer pixel_transfer(const CameraView& from, const CameraView& to) {
  const RelativePose rel = relative_pose(from, to);
  PixelTransfer pt;
  if (rel.R == Eigen::Matrix3d::Identity() && from.K == to.K)
    pt.M.setIdentity();
  else
    pt.M = to.K * rel.R * inverse_intrinsics(from.K);
  pt.b = to.K * rel.t;
  return pt;
}

}  // namespace symvs
