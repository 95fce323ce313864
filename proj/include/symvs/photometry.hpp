#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "symvs/camera.hpp"
#include "symvs/types.hpp"

namespace symvs {

/// Weights of the unsupervised objective.  Defaults are the published values.
struct LossWeights {
  double omega_u = 0.8;  // unary (view synthesis) term
  double omega_s = 0.1;  // depth smoothness
  double lambda1 = 0.5;  // L1 photometric
  double lambda2 = 0.8;  // image gradient
  double lambda3 = 0.5;  // SSIM
  double lambda4 = 0.2;  // census
  double lambda5 = 0.3;  // cross-view image consistency
  double lambda6 = 0.3;  // cross-view depth consistency
  double alpha1 = 0.5;   // edge awareness, first order
  double alpha2 = 0.5;   // edge awareness, second order
  double tau_occ = 5.0;  // occlusion threshold, depth units
  int census_window = 3;
};

/// Throws InvalidArgument on a negative weight or non-positive tau.
void validate(const LossWeights& w);

inline constexpr double kCharbonnierEpsilon = 0.001;

inline double charbonnier(double x) {
  return std::sqrt(x * x + kCharbonnierEpsilon * kCharbonnierEpsilon);
}
inline double charbonnier_derivative(double x) { return x / charbonnier(x); }
Plane charbonnier(const Plane& x);

/// One bit per non-centre window neighbour, row-major over the window:
/// set when the neighbour is darker than the centre.  Neighbours outside
/// the image compare as equal.
struct CensusDescriptor {
  int rows = 0;
  int cols = 0;
  int window = 0;
  int bits = 0;
  int words_per_pixel = 0;
  std::vector<std::uint64_t> words;

  bool bit(int r, int c, int k) const {
    return (words[(static_cast<std::size_t>(r) * cols + c) * words_per_pixel + k / 64] >> (k % 64)) & 1u;
  }
};

/// Throws BadWindow unless window is odd and >= 3.
CensusDescriptor census_transform(const Plane& gray, int window);

/// Per-pixel Hamming distance divided by the descriptor length.
Plane census_distance(const CensusDescriptor& a, const CensusDescriptor& b);

/// Channel-averaged SSIM with a 3×3 uniform window clipped at the border,
/// C1 = 0.01², C2 = 0.03².
Plane ssim_map(const Image& a, const Image& b);

/// Result of the masked photometric comparator.
struct ComparatorResult {
  double value = 0.0;
  double l1 = 0.0;        // mean phi(x - y)
  double gradient = 0.0;  // mean phi of the gradient residual
  double ssim = 0.0;      // mean (1 - SSIM) / 2
  double census = 0.0;    // mean phi(census distance)
  int count = 0;          // |M|
  Image grad_x;           // d value / d x, filled when requested
  Image grad_y;           // d value / d y
  Plane census_distance;  // the census distances used
};

/// Masked photometric comparator between two images.  `x_valid`/`y_valid`
/// describe where each image holds data; a term skips pixels whose stencil
/// touches invalid data.  Returns nullopt when the mask is empty.  When
/// `frozen_census` is given it replaces the census distance, which carries
/// no gradient.
std::optional<ComparatorResult> compare_images(const Image& x, const Mask& x_valid,
                                               const Image& y, const Mask& y_valid,
                                               const Mask& mask, const LossWeights& w,
                                               bool want_gradient,
                                               const Plane* frozen_census = nullptr);

/// Unary photometric loss between a reference and a synthesized image.
/// Throws EmptyMask when the mask selects no pixel.
double unary_loss(const Image& ref, const Image& syn, const Mask& mask, const LossWeights& w);

/// Edge-aware first- and second-order depth smoothness, normalized by the
/// total pixel count.
double smoothness_loss(const Image& image, const DepthMap& depth, const LossWeights& w);

/// Gradient of smoothness_loss with respect to each depth pixel.
Plane smoothness_gradient(const Image& image, const DepthMap& depth, const LossWeights& w);

/// Pairwise view synthesis loss:
///   omega_u (L_u^{ij} + L_u^{ji}) + omega_s (L_s^i + L_s^j) / 2.
/// A unary term with an empty mask contributes 0.
double synthesis_loss(const CameraView& view_i, const CameraView& view_j, const DepthMap& depth_i,
                      const DepthMap& depth_j, const Mask& mask_ij, const Mask& mask_ji,
                      const LossWeights& w);

}  // namespace symvs
