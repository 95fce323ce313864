#include "symvs/volume.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "symvs/errors.hpp"
#include "symvs/geometry.hpp"

namespace symvs {

DepthHypotheses DepthHypotheses::uniform(double d_min, double d_max, int count) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max))
    throw InvalidArgument("depth range must satisfy 0 < d_min < d_max");
  if (count < 2) throw InvalidArgument("need at least two depth hypotheses");
  DepthHypotheses h;
  h.d_min = d_min;
  h.d_max = d_max;
  h.count = count;
  h.samples.resize(count);
  const double step = (d_max - d_min) / (count - 1);
  for (int k = 0; k < count; ++k) h.samples[k] = d_min + k * step;
  h.samples.back() = d_max;
  return h;
}

DepthHypotheses DepthHypotheses::from_interval(double d_min, double interval, int count) {
  if (!(interval > 0.0)) throw InvalidArgument("depth interval must be positive");
  return uniform(d_min, d_min + interval * (count - 1), count);
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "intensity") return FeatureMode::kIntensity;
  if (name == "grad3") return FeatureMode::kGrad3;
  throw UnknownMode("unknown feature mode '" + std::string(name) + "'");
}

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::kIntensity ? "intensity" : "grad3";
}

FeatureMap extract_features(const Image& image, std::string_view mode) {
  return extract_features(image, parse_feature_mode(mode));
}

FeatureMap extract_features(const Image& image, FeatureMode mode) {
  const int rows = image.rows(), cols = image.cols();
  Plane gray = image.luminance();
  FeatureMap f;
  f.channels.push_back(gray);
  if (mode == FeatureMode::kIntensity) return f;

  Plane gx = Plane::Zero(rows, cols), gy = Plane::Zero(rows, cols);
  if (cols > 1)
    gx.leftCols(cols - 1) = gray.rightCols(cols - 1) - gray.leftCols(cols - 1);
  if (rows > 1)
    gy.topRows(rows - 1) = gray.bottomRows(rows - 1) - gray.topRows(rows - 1);
  f.channels.push_back(std::move(gx));
  f.channels.push_back(std::move(gy));
  return f;
}

CostVolume build_cost_volume(std::span<const CameraView> views,
                             std::span<const FeatureMap> features, int ref,
                             const DepthHypotheses& hypotheses) {
  if (views.size() < 2) throw TooFewViews("cost volume needs at least two views");
  if (features.size() != views.size())
    throw ShapeMismatch("one feature map per view is required");
  if (ref < 0 || ref >= static_cast<int>(views.size()))
    throw InvalidArgument("reference index out of range");
  const FeatureMap& ref_feat = features[ref];
  const int rows = ref_feat.rows(), cols = ref_feat.cols(), nf = ref_feat.num_channels();
  for (const FeatureMap& f : features)
    if (!f.same_shape(ref_feat)) throw ShapeMismatch("feature maps differ in shape");

  const int nviews = static_cast<int>(views.size());
  CostVolume vol;
  vol.ref_view = ref;
  vol.hypotheses = hypotheses;

  // per pixel: values[view * nf + channel]
  std::vector<double> group(nviews * nf);
  std::vector<double> channel_vals(nviews);
  std::vector<double> sq(nviews);

  for (int k = 0; k < hypotheses.count; ++k) {
    const double d = hypotheses.samples[k];
    std::vector<Eigen::Matrix3d> H;
    std::vector<int> others;
    for (int s = 0; s < nviews; ++s) {
      if (s == ref) continue;
      others.push_back(s);
      H.push_back(plane_homography_unnormalized(views[ref], views[s], d));
    }
    Plane cost = Plane::Zero(rows, cols);
    CountGrid support = CountGrid::Ones(rows, cols);
    Mask valid = Mask::Constant(rows, cols, false);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        int n = 0;
        for (int ch = 0; ch < nf; ++ch) group[ch] = ref_feat.channels[ch](r, c);
        ++n;
        for (std::size_t o = 0; o < others.size(); ++o) {
          const Eigen::Vector3d h = H[o] * Eigen::Vector3d(c, r, 1.0);
          if (!(h.z() > 0.0)) continue;
          const double x = h.x() / h.z(), y = h.y() / h.z();
          if (!(x >= 0.0 && x <= cols - 1 && y >= 0.0 && y <= rows - 1)) continue;
          const detail::Taps t = detail::taps_at(x, y, cols, rows);
          const FeatureMap& fs = features[others[o]];
          for (int ch = 0; ch < nf; ++ch)
            group[n * nf + ch] = detail::interpolate(fs.channels[ch], t);
          ++n;
        }
        support(r, c) = n;
        if (n < 2) continue;
        double var_sum = 0.0;
        for (int ch = 0; ch < nf; ++ch) {
          channel_vals.assign(n, 0.0);
          // shifted by the reference value so identical inputs give exactly 0
          for (int m = 0; m < n; ++m) channel_vals[m] = group[m * nf + ch] - group[ch];
          const double mean = canonical_sum(channel_vals) / n;
          for (int m = 0; m < n; ++m) {
            const double dv = channel_vals[m] - mean;
            sq[m] = dv * dv;
          }
          var_sum += canonical_sum(std::vector<double>(sq.begin(), sq.begin() + n)) / n;
        }
        cost(r, c) = var_sum / nf;
        valid(r, c) = true;
      }
    }
    vol.cost.push_back(std::move(cost));
    vol.support.push_back(std::move(support));
    vol.valid.push_back(std::move(valid));
  }
  return vol;
}

namespace {

// Box sums along one axis of a D×H×W stack, windows clipped to the range.
void box_sum_axis(std::vector<Plane>& stack, int axis, int radius) {
  if (radius == 0) return;
  const int D = static_cast<int>(stack.size());
  const int H = static_cast<int>(stack[0].rows()), W = static_cast<int>(stack[0].cols());
  if (axis == 0) {
    std::vector<Plane> out(D, Plane::Zero(H, W));
    for (int k = 0; k < D; ++k)
      for (int m = std::max(0, k - radius); m <= std::min(D - 1, k + radius); ++m) out[k] += stack[m];
    stack = std::move(out);
    return;
  }
  for (Plane& p : stack) {
    Plane out = Plane::Zero(H, W);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        double s = 0.0;
        if (axis == 1) {
          for (int m = std::max(0, r - radius); m <= std::min(H - 1, r + radius); ++m) s += p(m, c);
        } else {
          for (int m = std::max(0, c - radius); m <= std::min(W - 1, c + radius); ++m) s += p(r, m);
        }
        out(r, c) = s;
      }
    p = std::move(out);
  }
}

}  // namespace

CostVolume smooth_cost_volume(const CostVolume& volume, const std::array<int, 3>& radius) {
  for (int r : radius)
    if (r < 0) throw InvalidArgument("smoothing radii must be non-negative");
  CostVolume out = volume;
  const int D = volume.depth();
  if (D == 0) return out;
  std::vector<Plane> num(D), den(D);
  for (int k = 0; k < D; ++k) {
    den[k] = volume.valid[k].cast<double>();
    num[k] = volume.cost[k] * den[k];
  }
  for (int axis = 0; axis < 3; ++axis) {
    box_sum_axis(num, axis, radius[axis]);
    box_sum_axis(den, axis, radius[axis]);
  }
  for (int k = 0; k < D; ++k)
    out.cost[k] = (den[k] > 0.0).select(num[k] / den[k], volume.cost[k]);
  return out;
}

DepthRegression regress_depth(const CostVolume& volume, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const int D = volume.depth(), rows = volume.rows(), cols = volume.cols();
  const auto& samples = volume.hypotheses.samples;
  DepthRegression out;
  out.probability.prob.assign(D, Plane::Zero(rows, cols));
  Plane depth = Plane::Zero(rows, cols);
  Mask valid = Mask::Constant(rows, cols, false);
  std::vector<double> logit(D);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < D; ++k) {
        if (!volume.valid[k](r, c)) continue;
        logit[k] = -volume.cost[k](r, c) / temperature;
        best = std::max(best, logit[k]);
      }
      if (!std::isfinite(best)) continue;
      double z = 0.0;
      for (int k = 0; k < D; ++k)
        if (volume.valid[k](r, c)) z += std::exp(logit[k] - best);
      double expect = 0.0;
      for (int k = 0; k < D; ++k) {
        if (!volume.valid[k](r, c)) continue;
        const double p = std::exp(logit[k] - best) / z;
        out.probability.prob[k](r, c) = p;
        expect += samples[k] * p;
      }
      depth(r, c) = std::clamp(expect, volume.hypotheses.d_min, volume.hypotheses.d_max);
      valid(r, c) = true;
    }
  }
  out.depth = DepthMap(std::move(depth), std::move(valid));
  return out;
}

CountGrid argmin_hypothesis(const CostVolume& volume) {
  const int rows = volume.rows(), cols = volume.cols();
  CountGrid idx = CountGrid::Constant(rows, cols, -1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < volume.depth(); ++k)
        if (volume.valid[k](r, c) && volume.cost[k](r, c) < best) {
          best = volume.cost[k](r, c);
          idx(r, c) = k;
        }
    }
  return idx;
}

}  // namespace symvs
