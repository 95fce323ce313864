#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace symvs {

/// Single-channel H×W grid, indexed (row, col) = (y, x).
using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CountGrid = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// H×W×C intensity grid stored channel-planar.
struct Image {
  std::vector<Plane> channels;

  Image() = default;
  Image(int rows, int cols, int num_channels)
      : channels(num_channels, Plane::Zero(rows, cols)) {}

  int rows() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int cols() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int num_channels() const { return static_cast<int>(channels.size()); }
  bool same_shape(const Image& o) const {
    return rows() == o.rows() && cols() == o.cols() && num_channels() == o.num_channels();
  }

  double& operator()(int y, int x, int c) { return channels[c](y, x); }
  double operator()(int y, int x, int c) const { return channels[c](y, x); }

  /// Mean over channels.
  Plane luminance() const;
};

/// Per-pixel metric depth with validity.  Valid entries are positive and finite.
struct DepthMap {
  Plane values;
  Mask valid;

  DepthMap() = default;
  DepthMap(Plane v, Mask m) : values(std::move(v)), valid(std::move(m)) {}

  static DepthMap constant(int rows, int cols, double depth) {
    return DepthMap(Plane::Constant(rows, cols, depth), Mask::Constant(rows, cols, true));
  }
  /// Valid wherever the value is positive and finite.
  static DepthMap from_values(Plane v);

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  int count_valid() const { return static_cast<int>(valid.count()); }
};

/// Sum of the values in ascending order; independent of input order.
inline double canonical_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

/// Per-pixel canonical sum of several grids of identical shape.
Plane canonical_sum(std::span<const Plane> parts);

}  // namespace symvs
