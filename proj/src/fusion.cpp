#include "symvs/fusion.hpp"

#include "symvs/errors.hpp"
#include "symvs/geometry.hpp"

namespace symvs {
namespace {

void check(std::span<const DepthMap> depths, std::span<const CameraView> views) {
  if (depths.size() != views.size()) throw InvalidArgument("expected one depth map per view");
  for (std::size_t i = 0; i < views.size(); ++i)
    if (depths[i].rows() != views[i].rows() || depths[i].cols() != views[i].cols())
      throw ShapeMismatch("depth map " + std::to_string(i) + " does not match its view");
}

// D'_{j->i} for every j != i.
std::vector<std::vector<DepthMap>> warped_all(std::span<const DepthMap> depths,
                                              std::span<const CameraView> views) {
  const std::size_t n = views.size();
  std::vector<std::vector<DepthMap>> out(n, std::vector<DepthMap>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out[i][j] = warp_depth(depths[j], depths[i], views[j], views[i]);
  return out;
}

}  // namespace

std::vector<CountGrid> agreement_counts(std::span<const DepthMap> depths,
                                        std::span<const CameraView> views, double tau_fuse) {
  check(depths, views);
  if (!(tau_fuse > 0.0)) throw InvalidArgument("tau_fuse must be positive");
  const auto warped = warped_all(depths, views);
  std::vector<CountGrid> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const DepthMap& d = depths[i];
    CountGrid count = CountGrid::Zero(d.rows(), d.cols());
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (i == j) continue;
      const DepthMap& w = warped[i][j];
      count += (d.valid && w.valid && (d.values - w.values).abs() <= tau_fuse).cast<int>();
    }
    out.push_back(std::move(count));
  }
  return out;
}

std::vector<DepthMap> filter_consistent(std::span<const DepthMap> depths,
                                        std::span<const CameraView> views, double tau_fuse,
                                        int min_views) {
  check(depths, views);
  if (!(tau_fuse > 0.0)) throw InvalidArgument("tau_fuse must be positive");
  if (min_views < 1) throw InvalidArgument("min_views must be at least 1");
  const auto warped = warped_all(depths, views);
  std::vector<DepthMap> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const DepthMap& d = depths[i];
    DepthMap f(Plane::Zero(d.rows(), d.cols()), Mask::Constant(d.rows(), d.cols(), false));
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < d.cols(); ++c) {
        if (!d.valid(r, c)) continue;
        std::vector<double> agree{d.values(r, c)};
        for (std::size_t j = 0; j < views.size(); ++j) {
          if (i == j) continue;
          const DepthMap& w = warped[i][j];
          if (w.valid(r, c) && std::abs(d.values(r, c) - w.values(r, c)) <= tau_fuse)
            agree.push_back(w.values(r, c));
        }
        if (static_cast<int>(agree.size()) - 1 < min_views) continue;
        const double n = static_cast<double>(agree.size());
        f.values(r, c) = canonical_sum(std::move(agree)) / n;
        f.valid(r, c) = true;
      }
    out.push_back(std::move(f));
  }
  return out;
}

PointCloud depths_to_cloud(std::span<const DepthMap> depths, std::span<const CameraView> views) {
  check(depths, views);
  PointCloud cloud;
  bool colored = true;
  for (const CameraView& v : views) colored = colored && v.image.num_channels() > 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const CameraView& v = views[i];
    const Eigen::Matrix3d K_inv = inverse_intrinsics(v.K);
    const int nc = v.image.num_channels();
    for (int r = 0; r < depths[i].rows(); ++r)
      for (int c = 0; c < depths[i].cols(); ++c) {
        if (!depths[i].valid(r, c)) continue;
        const Eigen::Vector3d Xc = backproject(K_inv, double(c), double(r), depths[i].values(r, c));
        cloud.points.push_back(v.R.transpose() * (Xc - v.t));
        if (!colored) continue;
        Eigen::Vector3d rgb;
        for (int ch = 0; ch < 3; ++ch) rgb[ch] = v.image(r, c, nc >= 3 ? ch : 0);
        cloud.colors.push_back(rgb);
      }
  }
  return cloud;
}

}  // namespace symvs
