#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symvs/camera.hpp"
#include "symvs/photometry.hpp"
#include "symvs/types.hpp"

namespace symvs {

/// Valid/occluded flags for the ordered pair (i, j), in view i's frame.
struct OcclusionMask {
  int i = 0;
  int j = 0;
  Mask valid;
  int valid_count = 0;
};

using ViewPair = std::pair<int, int>;
using MaskSet = std::map<ViewPair, OcclusionMask>;

/// Forward-backward depth check: D_i is warped into view j and back; a
/// pixel is valid when both hops are valid and the round trip lands within
/// tau of D_i.
OcclusionMask occlusion_mask(const DepthMap& depth_i, const DepthMap& depth_j,
                             const CameraView& cam_i, const CameraView& cam_j, double tau);

/// Masks for every ordered pair of distinct views.
MaskSet compute_masks(std::span<const CameraView> views, std::span<const DepthMap> depths,
                      double tau);

/// Everything the objective reads.
struct LossState {
  std::vector<CameraView> views;
  std::vector<DepthMap> depths;
  MaskSet masks;
  LossWeights weights;
};

/// Cross-view image consistency L_m^{i,j}: I_j against I''_{i->j} under
/// M_ji.  Throws EmptyMask when nothing is comparable.
double image_consistency_loss(int i, int j, const LossState& state);

/// Cross-view depth consistency L_d^{i,j}: mean phi(D_i - D'_{j->i}) under
/// M_ij.  Throws EmptyMask when nothing is comparable.
double depth_consistency_loss(int i, int j, const LossState& state);

/// Multi-view brightness consistency anchored at view i: I''_{j->i} against
/// I''_{k->i} under M_ij and M_ik.  Throws InvalidArgument unless i, j, k
/// are distinct and EmptyMask when nothing is comparable.
double brightness_consistency_loss(int i, int j, int k, const LossState& state);

struct TermValue {
  double value = 0.0;
  bool skipped = false;  // empty mask, contributes 0
};

/// Every term of the objective.  Terms are unweighted; the aggregates carry
/// the weights:
///   synthesis{i,j}  = omega_u (Lu_ij + Lu_ji) + omega_s (Ls_i + Ls_j) / 2
///   cross_view{i,j} = lambda5 (Lm_ij + Lm_ji) + lambda6 (Ld_ij + Ld_ji)
///                     + sum over k outside {i,j} of Lb(k; i, j)
///   total = sum of synthesis + consistency,  consistency = sum of cross_view
struct LossBreakdown {
  std::map<ViewPair, TermValue> unary;
  std::map<int, double> smoothness;
  std::map<ViewPair, TermValue> image_consistency;
  std::map<ViewPair, TermValue> depth_consistency;
  std::map<std::array<int, 3>, TermValue> brightness;  // (anchor, j, k), j < k
  std::map<ViewPair, double> synthesis;                // i < j
  std::map<ViewPair, double> cross_view;               // i < j
  double consistency = 0.0;
  double total = 0.0;

  /// Total rebuilt from the recorded terms.
  double recompute_total(const LossWeights& w) const;

  /// Weighted contribution of each term family; they sum to total.
  struct Contributions {
    double unary = 0, smoothness = 0, image = 0, depth = 0, brightness = 0;
  };
  Contributions contributions(const LossWeights& w) const;

  /// One `key=value` line per term (Lu_i_j, Ls_i, Lm_i_j, Ld_i_j, Lb_a_j_k,
  /// Lsyn_i_j, Lc_i_j, Lconsistency, total), then `skipped=` listing
  /// empty-mask terms.
  std::string report() const;
};

/// Census distances keyed by term, reused when present so that the census
/// term stays fixed across evaluations (finite-difference checks).
using CensusCache = std::map<std::string, Plane>;

struct ObjectiveValue {
  LossBreakdown breakdown;
  std::vector<Plane> gradient;  // d total / d depth per view; empty unless requested
};

/// Evaluates the objective with masks held fixed.  Throws TooFewViews for
/// fewer than two views and InvalidArgument when a mask is missing.
ObjectiveValue evaluate_objective(std::span<const CameraView> views,
                                  std::span<const DepthMap> depths, const MaskSet& masks,
                                  const LossWeights& w, bool want_gradient,
                                  CensusCache* census = nullptr);

LossBreakdown total_loss(const LossState& state);

}  // namespace symvs
