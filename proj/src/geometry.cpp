#include "symvs/geometry.hpp"

#include <limits>
#include <string>

#include "symvs/errors.hpp"

namespace symvs {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_field_shape(const Image& image, const WarpField& field) {
  if (image.rows() != field.rows() || image.cols() != field.cols())
    throw ShapeMismatch("warp field is " + std::to_string(field.rows()) + "x" +
                        std::to_string(field.cols()) + " but image is " +
                        std::to_string(image.rows()) + "x" + std::to_string(image.cols()));
}

}  // namespace

Eigen::Matrix3d plane_homography_unnormalized(const CameraView& src, const CameraView& dst,
                                              double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw NonFiniteResult("plane depth must be positive and finite");
  const PixelTransfer pt = pixel_transfer(src, dst);
  // b·n^T·K_src^-1 / depth with n = e_z; the last row of K_src^-1 is e_z^T.
  Eigen::Matrix3d H = pt.M;
  H.col(2) += pt.b / depth;
  return H;
}

Eigen::Matrix3d plane_homography(const CameraView& src, const CameraView& dst, double depth) {
  Eigen::Matrix3d H = plane_homography_unnormalized(src, dst, depth);
  if (!H.allFinite() || H(2, 2) == 0.0)
    throw NonFiniteResult("degenerate plane homography");
  H /= H(2, 2);
  if (!H.allFinite()) throw NonFiniteResult("degenerate plane homography");
  return H;
}

WarpField make_warp_field(Plane x, Plane y, int source_rows, int source_cols) {
  WarpField f{std::move(x), std::move(y), Mask()};
  const double xmax = source_cols - 1, ymax = source_rows - 1;
  f.in_bounds = (f.x >= 0.0 && f.x <= xmax && f.y >= 0.0 && f.y <= ymax);
  return f;
}

WarpField identity_field(int rows, int cols) {
  Plane x(rows, cols), y(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      x(r, c) = c;
      y(r, c) = r;
    }
  return make_warp_field(std::move(x), std::move(y), rows, cols);
}

Sampled bilinear_sample(const Image& image, const WarpField& field) {
  return bilinear_sample(image, Mask::Constant(image.rows(), image.cols(), true), field);
}

Sampled bilinear_sample(const Image& image, const Mask& image_valid, const WarpField& field) {
  check_field_shape(image, field);
  const int rows = image.rows(), cols = image.cols(), nc = image.num_channels();
  Sampled out{Image(rows, cols, nc), Mask::Constant(rows, cols, false)};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!field.in_bounds(r, c)) continue;
      const detail::Taps t = detail::taps_at(field.x(r, c), field.y(r, c), cols, rows);
      if (!detail::taps_valid(image_valid, t)) continue;
      out.valid(r, c) = true;
      for (int ch = 0; ch < nc; ++ch) out.image(r, c, ch) = detail::interpolate(image.channels[ch], t);
    }
  }
  return out;
}

SampleJacobian bilinear_sample_jacobian(const Image& image, const WarpField& field) {
  check_field_shape(image, field);
  const int rows = image.rows(), cols = image.cols(), nc = image.num_channels();
  SampleJacobian J{Image(rows, cols, nc), Image(rows, cols, nc)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!field.in_bounds(r, c)) continue;
      const detail::Taps t = detail::taps_at(field.x(r, c), field.y(r, c), cols, rows);
      for (int ch = 0; ch < nc; ++ch)
        detail::interpolate_gradient(image.channels[ch], t, J.d_dx(r, c, ch), J.d_dy(r, c, ch));
    }
  return J;
}

void bilinear_sample_backward(const Image& image, const WarpField& field, const Mask& out_valid,
                              const Image& grad_out, Plane& grad_x, Plane& grad_y,
                              Image* grad_image) {
  check_field_shape(image, field);
  const int rows = image.rows(), cols = image.cols(), nc = image.num_channels();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!out_valid(r, c)) continue;
      const detail::Taps t = detail::taps_at(field.x(r, c), field.y(r, c), cols, rows);
      double gx = 0.0, gy = 0.0;
      for (int ch = 0; ch < nc; ++ch) {
        const double g = grad_out(r, c, ch);
        if (g == 0.0) continue;
        double ddx, ddy;
        detail::interpolate_gradient(image.channels[ch], t, ddx, ddy);
        gx += g * ddx;
        gy += g * ddy;
        if (grad_image) detail::scatter(grad_image->channels[ch], t, g);
      }
      grad_x(r, c) += gx;
      grad_y(r, c) += gy;
    }
  }
}

Transfer compute_transfer(const DepthMap& target_depth, const CameraView& target,
                          const CameraView& source) {
  const int rows = target_depth.rows(), cols = target_depth.cols();
  const PixelTransfer pt = pixel_transfer(target, source);
  Plane x = Plane::Constant(rows, cols, kNaN), y = Plane::Constant(rows, cols, kNaN);
  Transfer tr;
  tr.dx_ddepth = Plane::Zero(rows, cols);
  tr.dy_ddepth = Plane::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!target_depth.valid(r, c)) continue;
      const double d = target_depth.values(r, c);
      const Eigen::Vector3d h = pt.M * Eigen::Vector3d(c, r, 1.0) + pt.b / d;
      if (!(h.z() > 0.0)) continue;
      x(r, c) = h.x() / h.z();
      y(r, c) = h.y() / h.z();
      // dh/dd = -b / d^2
      const Eigen::Vector3d dh = -pt.b / (d * d);
      const double z2 = h.z() * h.z();
      tr.dx_ddepth(r, c) = (dh.x() * h.z() - h.x() * dh.z()) / z2;
      tr.dy_ddepth(r, c) = (dh.y() * h.z() - h.y() * dh.z()) / z2;
    }
  }
  tr.field = make_warp_field(std::move(x), std::move(y), source.rows(), source.cols());
  return tr;
}

Sampled synthesize_view(const DepthMap& target_depth, const CameraView& source,
                        const CameraView& target) {
  if (target_depth.rows() != target.rows() || target_depth.cols() != target.cols())
    throw ShapeMismatch("target depth does not match the target view");
  const Transfer tr = compute_transfer(target_depth, target, source);
  return bilinear_sample(source.image, tr.field);
}

DepthWarp warp_depth_detailed(const DepthMap& source_depth, const Transfer& transfer,
                              const CameraView& source, const CameraView& target) {
  const int rows = transfer.field.rows(), cols = transfer.field.cols();
  if (source_depth.rows() != rows || source_depth.cols() != cols)
    throw ShapeMismatch("source depth does not match the warp grid");
  const RelativePose rel = relative_pose(source, target);
  DepthWarp w;
  w.g = (rel.R * inverse_intrinsics(source.K)).row(2).transpose();
  w.offset = rel.t.z();
  w.sampled = Plane::Zero(rows, cols);
  w.gamma = Plane::Zero(rows, cols);
  Plane out = Plane::Zero(rows, cols);
  Mask valid = Mask::Constant(rows, cols, false);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!transfer.field.in_bounds(r, c)) continue;
      const double x = transfer.field.x(r, c), y = transfer.field.y(r, c);
      const detail::Taps t = detail::taps_at(x, y, cols, rows);
      if (!detail::taps_valid(source_depth.valid, t)) continue;
      const double s = detail::interpolate(source_depth.values, t);
      const double gamma = w.g.x() * x + w.g.y() * y + w.g.z();
      const double z = s * gamma + w.offset;
      w.sampled(r, c) = s;
      w.gamma(r, c) = gamma;
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      out(r, c) = z;
      valid(r, c) = true;
    }
  }
  w.result = DepthMap(std::move(out), std::move(valid));
  return w;
}

DepthMap warp_depth(const DepthMap& source_depth, const DepthMap& target_depth,
                    const CameraView& source, const CameraView& target) {
  const Transfer tr = compute_transfer(target_depth, target, source);
  return warp_depth_detailed(source_depth, tr, source, target).result;
}

}  // namespace symvs
