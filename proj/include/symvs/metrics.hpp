#pragma once

#include <string>

#include "symvs/fusion.hpp"
#include "symvs/types.hpp"

namespace symvs {

struct DepthMetrics {
  double abs_rel = 0.0;
  double abs_diff = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;  // fraction with max(p/g, g/p) < 1.25
  double delta2 = 0.0;  // < 1.25^2
  double delta3 = 0.0;  // < 1.25^3
  int n_evaluated = 0;
};

/// Over pixels valid in both maps.  Throws EmptyOverlap when there are
/// none and NonPositiveGT when a compared ground-truth value is <= 0.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt);

struct CloudMetrics {
  double acc_mean = 0.0, acc_median = 0.0, acc_var = 0.0;
  double comp_mean = 0.0, comp_median = 0.0, comp_var = 0.0;
  double overall = 0.0;  // (acc_mean + comp_mean) / 2
  double acc_pct = 0.0;  // percent of pred points closer than threshold to gt
  double comp_pct = 0.0;
  double f_score = 0.0;
  double threshold = 0.0;
};

/// Exact nearest-neighbour accuracy/completeness.  Throws EmptyCloud.
CloudMetrics cloud_metrics(const PointCloud& pred, const PointCloud& gt, double threshold);

/// Mean of the two mean distances.
inline double overall_score(double acc_mean, double comp_mean) { return (acc_mean + comp_mean) / 2.0; }

/// `key=value` lines.
std::string report(const DepthMetrics& m);
std::string report(const CloudMetrics& m);

/// Header line and one data line.
std::string csv(const DepthMetrics& m);
std::string csv(const CloudMetrics& m);

}  // namespace symvs
