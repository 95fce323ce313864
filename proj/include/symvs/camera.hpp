#pragma once

#include <Eigen/Dense>

#include "symvs/types.hpp"

namespace symvs {

/// Pinhole camera with world-to-camera pose and the image it observed.
///
/// A world point X maps to camera coordinates R·X + t and to pixel
/// K·x / x_z.  Integer pixel coordinates address pixel centres.
struct CameraView {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  Image image;

  Eigen::Vector3d center() const { return -R.transpose() * t; }
  int rows() const { return image.rows(); }
  int cols() const { return image.cols(); }
};

/// Throws InvalidCamera unless K is upper triangular with positive focal
/// entries and K(2,2) = 1, and R is a rotation within 1e-9.
void validate(const CameraView& view);

/// Throws ShapeMismatch unless every view shares H, W and C.
void validate_same_shape(std::span<const CameraView> views);

/// Closed-form inverse of an upper-triangular intrinsic matrix with K(2,2) = 1.
Eigen::Matrix3d inverse_intrinsics(const Eigen::Matrix3d& K);

/// Rigid motion taking `from` camera coordinates to `to` camera coordinates.
/// Identical poses give exactly R = I, t = 0.
struct RelativePose {
  Eigen::Matrix3d R;
  Eigen::Vector3d t;
};
RelativePose relative_pose(const CameraView& from, const CameraView& to);

/// Pixel transfer between two cameras parameterized by depth in `from`:
///   h = M·p + b / depth,   pixel in `to` = (h_x / h_z, h_y / h_z),
/// where p = [x, y, 1].  h_z has the sign of the point's depth in `to`.
/// Equal cameras give exactly M = I, b = 0.
struct PixelTransfer {
  Eigen::Matrix3d M;
  Eigen::Vector3d b;
};
PixelTransfer pixel_transfer(const CameraView& from, const CameraView& to);

/// Backprojects pixel (x, y) at the given depth into camera coordinates.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> backproject(const Eigen::Matrix3d& K_inv, Scalar x, Scalar y,
                                        Scalar depth) {
  const Eigen::Matrix<Scalar, 3, 1> ray =
      K_inv.cast<Scalar>() * Eigen::Matrix<Scalar, 3, 1>(x, y, Scalar(1));
  return ray * depth;
}

/// Projects camera coordinates to pixel coordinates.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> project(const Eigen::Matrix3d& K,
                                                     const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 3, 1> h = K.cast<Scalar>() * X;
  return h.template head<2>() / h.z();
}

}  // namespace symvs
