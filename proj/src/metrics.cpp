#include "symvs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>
#include <vector>

#include "symvs/errors.hpp"

namespace symvs {
namespace {

struct Stats {
  double mean = 0.0, median = 0.0, var = 0.0, pct = 0.0;
};

Stats stats(std::vector<double> d, double threshold) {
  Stats s;
  const double n = static_cast<double>(d.size());
  std::sort(d.begin(), d.end());
  for (double x : d) s.mean += x;
  s.mean /= n;
  for (double x : d) s.var += (x - s.mean) * (x - s.mean);
  s.var /= n;
  const std::size_t m = d.size() / 2;
  s.median = d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
  s.pct = 100.0 * static_cast<double>(std::lower_bound(d.begin(), d.end(), threshold) - d.begin()) / n;
  return s;
}

std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const Eigen::Vector3d& p : from.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Vector3d& q : to.points) best = std::min(best, (p - q).squaredNorm());
    out.push_back(std::sqrt(best));
  }
  return out;
}

std::string format(const std::vector<std::pair<const char*, double>>& kv, bool as_csv) {
  std::string head, row, lines;
  char buf[64];
  for (const auto& [k, v] : kv) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    head += (head.empty() ? "" : ",") + std::string(k);
    row += (row.empty() ? "" : ",") + std::string(buf);
    lines += std::string(k) + "=" + buf + "\n";
  }
  return as_csv ? head + "\n" + row + "\n" : lines;
}

std::vector<std::pair<const char*, double>> fields(const DepthMetrics& m) {
  return {{"abs_rel", m.abs_rel}, {"abs_diff", m.abs_diff}, {"sq_rel", m.sq_rel},
          {"rmse", m.rmse},       {"rmse_log", m.rmse_log}, {"delta1", m.delta1},
          {"delta2", m.delta2},   {"delta3", m.delta3},     {"n_evaluated", double(m.n_evaluated)}};
}

std::vector<std::pair<const char*, double>> fields(const CloudMetrics& m) {
  return {{"acc_mean", m.acc_mean},   {"acc_median", m.acc_median},   {"acc_var", m.acc_var},
          {"comp_mean", m.comp_mean}, {"comp_median", m.comp_median}, {"comp_var", m.comp_var},
          {"overall", m.overall},     {"acc_pct", m.acc_pct},         {"comp_pct", m.comp_pct},
          {"f_score", m.f_score},     {"threshold", m.threshold}};
}

}  // namespace

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ShapeMismatch("predicted and ground-truth depth differ in shape");
  const Mask joint = pred.valid && gt.valid;
  DepthMetrics m;
  m.n_evaluated = static_cast<int>(joint.count());
  if (m.n_evaluated == 0) throw EmptyOverlap("no pixel is valid in both depth maps");
  double sq = 0.0, sqlog = 0.0;
  int d1 = 0, d2 = 0, d3 = 0;
  for (int r = 0; r < gt.rows(); ++r)
    for (int c = 0; c < gt.cols(); ++c) {
      if (!joint(r, c)) continue;
      const double p = pred.values(r, c), g = gt.values(r, c);
      if (!(g > 0.0)) throw NonPositiveGT("ground-truth depth must be positive");
      const double e = p - g;
      m.abs_rel += std::abs(e) / g;
      m.abs_diff += std::abs(e);
      m.sq_rel += e * e / g;
      sq += e * e;
      const double l = std::log(p) - std::log(g);
      sqlog += l * l;
      // max(p/g, g/p) < t without the rounding of the quotient
      auto within = [&](double t) { return p < t * g && g < t * p; };
      d1 += within(1.25);
      d2 += within(1.25 * 1.25);
      d3 += within(1.25 * 1.25 * 1.25);
    }
  const double n = m.n_evaluated;
  m.abs_rel /= n;
  m.abs_diff /= n;
  m.sq_rel /= n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sqlog / n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

CloudMetrics cloud_metrics(const PointCloud& pred, const PointCloud& gt, double threshold) {
  if (pred.size() == 0 || gt.size() == 0) throw EmptyCloud("cloud metrics need two non-empty clouds");
  if (!(threshold > 0.0)) throw InvalidArgument("threshold must be positive");
  const Stats acc = stats(nearest_distances(pred, gt), threshold);
  const Stats comp = stats(nearest_distances(gt, pred), threshold);
  CloudMetrics m;
  m.acc_mean = acc.mean;
  m.acc_median = acc.median;
  m.acc_var = acc.var;
  m.comp_mean = comp.mean;
  m.comp_median = comp.median;
  m.comp_var = comp.var;
  m.overall = overall_score(acc.mean, comp.mean);
  m.acc_pct = acc.pct;
  m.comp_pct = comp.pct;
  m.f_score = acc.pct + comp.pct > 0.0 ? 2.0 * acc.pct * comp.pct / (acc.pct + comp.pct) : 0.0;
  m.threshold = threshold;
  return m;
}

std::string report(const DepthMetrics& m) { return format(fields(m), false); }
std::string report(const CloudMetrics& m) { return format(fields(m), false); }
std::string csv(const DepthMetrics& m) { return format(fields(m), true); }
std::string csv(const CloudMetrics& m) { return format(fields(m), true); }

}  // namespace symvs
