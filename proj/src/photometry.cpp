#include "symvs/photometry.hpp"

#include <bit>
#include <string>

#include "symvs/errors.hpp"
#include "symvs/geometry.hpp"

namespace symvs {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Window moments of one channel pair at (r, c), 3×3 clipped.
struct WindowMoments {
  int n = 0;
  double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
};

WindowMoments window_moments(const Plane& a, const Plane& b, int r, int c) {
  WindowMoments m;
  const int rows = static_cast<int>(a.rows()), cols = static_cast<int>(a.cols());
  for (int dr = -1; dr <= 1; ++dr) {
    const int rr = r + dr;
    if (rr < 0 || rr >= rows) continue;
    for (int dc = -1; dc <= 1; ++dc) {
      const int cc = c + dc;
      if (cc < 0 || cc >= cols) continue;
      const double x = a(rr, cc), y = b(rr, cc);
      m.mx += x;
      m.my += y;
      m.exx += x * x;
      m.eyy += y * y;
      m.exy += x * y;
      ++m.n;
    }
  }
  m.mx /= m.n;
  m.my /= m.n;
  m.exx /= m.n;
  m.eyy /= m.n;
  m.exy /= m.n;
  return m;
}

struct SsimParts {
  double s, a1, a2, b1, b2;
};

SsimParts ssim_parts(const WindowMoments& m) {
  SsimParts p;
  const double sxx = m.exx - m.mx * m.mx;
  const double syy = m.eyy - m.my * m.my;
  const double sxy = m.exy - m.mx * m.my;
  p.a1 = 2.0 * m.mx * m.my + kC1;
  p.a2 = 2.0 * sxy + kC2;
  p.b1 = m.mx * m.mx + m.my * m.my + kC1;
  p.b2 = sxx + syy + kC2;
  p.s = (p.a1 * p.a2) / (p.b1 * p.b2);
  return p;
}

bool window_valid(const Mask& valid, int r, int c, int radius) {
  const int rows = static_cast<int>(valid.rows()), cols = static_cast<int>(valid.cols());
  for (int rr = std::max(0, r - radius); rr <= std::min(rows - 1, r + radius); ++rr)
    for (int cc = std::max(0, c - radius); cc <= std::min(cols - 1, c + radius); ++cc)
      if (!valid(rr, cc)) return false;
  return true;
}

}  // namespace

void validate(const LossWeights& w) {
  for (double v : {w.omega_u, w.omega_s, w.lambda1, w.lambda2, w.lambda3, w.lambda4, w.lambda5,
                   w.lambda6, w.alpha1, w.alpha2})
    if (!(v >= 0.0)) throw InvalidArgument("loss weights must be non-negative");
  if (!(w.tau_occ > 0.0)) throw InvalidArgument("tau_occ must be positive");
  if (w.census_window < 3 || w.census_window % 2 == 0)
    throw BadWindow("census window must be odd and at least 3");
}

Plane charbonnier(const Plane& x) {
  return (x.square() + kCharbonnierEpsilon * kCharbonnierEpsilon).sqrt();
}

CensusDescriptor census_transform(const Plane& gray, int window) {
  if (window < 3 || window % 2 == 0)
    throw BadWindow("census window must be odd and at least 3, got " + std::to_string(window));
  CensusDescriptor d;
  d.rows = static_cast<int>(gray.rows());
  d.cols = static_cast<int>(gray.cols());
  d.window = window;
  d.bits = window * window - 1;
  d.words_per_pixel = (d.bits + 63) / 64;
  d.words.assign(static_cast<std::size_t>(d.rows) * d.cols * d.words_per_pixel, 0);
  const int rad = window / 2;
  for (int r = 0; r < d.rows; ++r) {
    for (int c = 0; c < d.cols; ++c) {
      std::uint64_t* w = &d.words[(static_cast<std::size_t>(r) * d.cols + c) * d.words_per_pixel];
      const double centre = gray(r, c);
      int k = 0;
      for (int dr = -rad; dr <= rad; ++dr) {
        for (int dc = -rad; dc <= rad; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < d.rows && cc >= 0 && cc < d.cols && gray(rr, cc) < centre)
            w[k / 64] |= std::uint64_t{1} << (k % 64);
          ++k;
        }
      }
    }
  }
  return d;
}

Plane census_distance(const CensusDescriptor& a, const CensusDescriptor& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.bits != b.bits)
    throw ShapeMismatch("census descriptors differ in shape or length");
  Plane out(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r)
    for (int c = 0; c < a.cols; ++c) {
      const std::size_t base = (static_cast<std::size_t>(r) * a.cols + c) * a.words_per_pixel;
      int ham = 0;
      for (int k = 0; k < a.words_per_pixel; ++k) ham += std::popcount(a.words[base + k] ^ b.words[base + k]);
      out(r, c) = static_cast<double>(ham) / a.bits;
    }
  return out;
}

Plane ssim_map(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("ssim_map inputs differ in shape");
  const int rows = a.rows(), cols = a.cols(), nc = a.num_channels();
  Plane out = Plane::Zero(rows, cols);
  for (int ch = 0; ch < nc; ++ch)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        out(r, c) += ssim_parts(window_moments(a.channels[ch], b.channels[ch], r, c)).s;
  return out / nc;
}

std::optional<ComparatorResult> compare_images(const Image& x, const Mask& x_valid,
                                               const Image& y, const Mask& y_valid,
                                               const Mask& mask, const LossWeights& w,
                                               bool want_gradient, const Plane* frozen_census) {
  if (!x.same_shape(y)) throw ShapeMismatch("compared images differ in shape");
  const int rows = x.rows(), cols = x.cols(), nc = x.num_channels();
  if (mask.rows() != rows || mask.cols() != cols || x_valid.rows() != rows ||
      y_valid.rows() != rows || x_valid.cols() != cols || y_valid.cols() != cols)
    throw ShapeMismatch("mask does not match the compared images");

  const Mask both = x_valid && y_valid;
  const Mask m1 = mask && both;
  ComparatorResult res;
  res.count = static_cast<int>(m1.count());
  if (res.count == 0) return std::nullopt;
  if (want_gradient) {
    res.grad_x = Image(rows, cols, nc);
    res.grad_y = Image(rows, cols, nc);
  }
  const int census_rad = w.census_window / 2;

  // Stencil masks for the gradient, SSIM and census terms.
  Mask mg = Mask::Constant(rows, cols, false);
  Mask ms = Mask::Constant(rows, cols, false);
  Mask mc = Mask::Constant(rows, cols, false);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!m1(r, c)) continue;
      mg(r, c) = (c == cols - 1 || both(r, c + 1)) && (r == rows - 1 || both(r + 1, c));
      ms(r, c) = window_valid(both, r, c, 1);
      mc(r, c) = census_rad == 1 ? ms(r, c) : window_valid(both, r, c, census_rad);
    }

  // L1 photometric.
  {
    const double scale = 1.0 / (static_cast<double>(nc) * res.count);
    double sum = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (!m1(r, c)) continue;
        for (int ch = 0; ch < nc; ++ch) {
          const double d = x(r, c, ch) - y(r, c, ch);
          sum += charbonnier(d);
          if (want_gradient) {
            const double g = w.lambda1 * scale * charbonnier_derivative(d);
            res.grad_x(r, c, ch) += g;
            res.grad_y(r, c, ch) -= g;
          }
        }
      }
    res.l1 = sum * scale;
  }

  // Image gradient residual.
  const int ng = static_cast<int>(mg.count());
  if (ng > 0) {
    const double scale = 1.0 / (2.0 * nc * ng);
    double sum = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (!mg(r, c)) continue;
        for (int ch = 0; ch < nc; ++ch) {
          const Plane& X = x.channels[ch];
          const Plane& Y = y.channels[ch];
          const double rx = c + 1 < cols ? (X(r, c + 1) - X(r, c)) - (Y(r, c + 1) - Y(r, c)) : 0.0;
          const double ry = r + 1 < rows ? (X(r + 1, c) - X(r, c)) - (Y(r + 1, c) - Y(r, c)) : 0.0;
          sum += charbonnier(rx) + charbonnier(ry);
          if (!want_gradient) continue;
          const double gx = w.lambda2 * scale * charbonnier_derivative(rx);
          const double gy = w.lambda2 * scale * charbonnier_derivative(ry);
          if (c + 1 < cols) {
            res.grad_x(r, c + 1, ch) += gx;
            res.grad_x(r, c, ch) -= gx;
            res.grad_y(r, c + 1, ch) -= gx;
            res.grad_y(r, c, ch) += gx;
          }
          if (r + 1 < rows) {
            res.grad_x(r + 1, c, ch) += gy;
            res.grad_x(r, c, ch) -= gy;
            res.grad_y(r + 1, c, ch) -= gy;
            res.grad_y(r, c, ch) += gy;
          }
        }
      }
    res.gradient = sum * scale;
  }

  // Structural similarity.
  const int ns = static_cast<int>(ms.count());
  if (ns > 0) {
    const double scale = 1.0 / (2.0 * nc * ns);  // d[(1 - S)/2]/dS per channel, averaged
    double sum = 0.0;
    for (int ch = 0; ch < nc; ++ch) {
      const Plane& X = x.channels[ch];
      const Plane& Y = y.channels[ch];
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          if (!ms(r, c)) continue;
          const WindowMoments m = window_moments(X, Y, r, c);
          const SsimParts p = ssim_parts(m);
          sum += 1.0 - p.s;
          if (!want_gradient) continue;
          const double bb = p.b1 * p.b2;
          const double ds_dmx = (2.0 * m.my * p.a2 - 2.0 * m.my * p.a1) / bb -
                                p.s * (2.0 * m.mx / p.b1 - 2.0 * m.mx / p.b2);
          const double ds_dmy = (2.0 * m.mx * p.a2 - 2.0 * m.mx * p.a1) / bb -
                                p.s * (2.0 * m.my / p.b1 - 2.0 * m.my / p.b2);
          const double ds_dexx = -p.s / p.b2;
          const double ds_deyy = -p.s / p.b2;
          const double ds_dexy = 2.0 * p.a1 / bb;
          const double g = -w.lambda3 * scale / m.n;
          for (int rr = std::max(0, r - 1); rr <= std::min(rows - 1, r + 1); ++rr)
            for (int cc = std::max(0, c - 1); cc <= std::min(cols - 1, c + 1); ++cc) {
              const double xv = X(rr, cc), yv = Y(rr, cc);
              res.grad_x(rr, cc, ch) += g * (ds_dmx + 2.0 * xv * ds_dexx + yv * ds_dexy);
              res.grad_y(rr, cc, ch) += g * (ds_dmy + 2.0 * yv * ds_deyy + xv * ds_dexy);
            }
        }
    }
    res.ssim = sum * scale;
  }

  // Census; treated as locally constant.
  if (frozen_census) {
    res.census_distance = *frozen_census;
  } else {
    res.census_distance = census_distance(census_transform(x.luminance(), w.census_window),
                                          census_transform(y.luminance(), w.census_window));
  }
  const int ncen = static_cast<int>(mc.count());
  if (ncen > 0) {
    double sum = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (mc(r, c)) sum += charbonnier(res.census_distance(r, c));
    res.census = sum / ncen;
  }

  res.value = w.lambda1 * res.l1 + w.lambda2 * res.gradient + w.lambda3 * res.ssim +
              w.lambda4 * res.census;
  return res;
}

double unary_loss(const Image& ref, const Image& syn, const Mask& mask, const LossWeights& w) {
  const Mask all = Mask::Constant(ref.rows(), ref.cols(), true);
  auto res = compare_images(ref, all, syn, mask, mask, w, false);
  if (!res) throw EmptyMask("unary loss mask selects no pixel");
  return res->value;
}

namespace {

struct EdgeWeights {
  Plane first;
  Plane second;
};

EdgeWeights edge_weights(const Image& image, const LossWeights& w) {
  const int rows = image.rows(), cols = image.cols(), nc = image.num_channels();
  Plane g1 = Plane::Zero(rows, cols), g2 = Plane::Zero(rows, cols);
  for (const Plane& I : image.channels) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        double gx = c + 1 < cols ? I(r, c + 1) - I(r, c) : 0.0;
        double gy = r + 1 < rows ? I(r + 1, c) - I(r, c) : 0.0;
        g1(r, c) += std::abs(gx) + std::abs(gy);
        if (r > 0 && c > 0 && r + 1 < rows && c + 1 < cols)
          g2(r, c) += std::abs(I(r, c + 1) + I(r, c - 1) + I(r + 1, c) + I(r - 1, c) - 4.0 * I(r, c));
      }
  }
  return {(-w.alpha1 * g1 / nc).exp(), (-w.alpha2 * g2 / nc).exp()};
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double smoothness_loss(const Image& image, const DepthMap& depth, const LossWeights& w) {
  const int rows = depth.rows(), cols = depth.cols();
  if (image.rows() != rows || image.cols() != cols)
    throw ShapeMismatch("smoothness image and depth differ in shape");
  const EdgeWeights ew = edge_weights(image, w);
  const Plane& D = depth.values;
  const Mask& V = depth.valid;
  double sum = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!V(r, c)) continue;
      double first = 0.0;
      if (c + 1 < cols && V(r, c + 1)) first += std::abs(D(r, c + 1) - D(r, c));
      if (r + 1 < rows && V(r + 1, c)) first += std::abs(D(r + 1, c) - D(r, c));
      double second = 0.0;
      if (r > 0 && c > 0 && r + 1 < rows && c + 1 < cols && V(r, c + 1) && V(r, c - 1) &&
          V(r + 1, c) && V(r - 1, c))
        second = std::abs(D(r, c + 1) + D(r, c - 1) + D(r + 1, c) + D(r - 1, c) - 4.0 * D(r, c));
      sum += ew.first(r, c) * first + ew.second(r, c) * second;
    }
  return sum / (static_cast<double>(rows) * cols);
}

Plane smoothness_gradient(const Image& image, const DepthMap& depth, const LossWeights& w) {
  const int rows = depth.rows(), cols = depth.cols();
  if (image.rows() != rows || image.cols() != cols)
    throw ShapeMismatch("smoothness image and depth differ in shape");
  const EdgeWeights ew = edge_weights(image, w);
  const Plane& D = depth.values;
  const Mask& V = depth.valid;
  const double inv_n = 1.0 / (static_cast<double>(rows) * cols);
  Plane g = Plane::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!V(r, c)) continue;
      const double w1 = ew.first(r, c) * inv_n;
      if (c + 1 < cols && V(r, c + 1)) {
        const double s = w1 * sign(D(r, c + 1) - D(r, c));
        g(r, c + 1) += s;
        g(r, c) -= s;
      }
      if (r + 1 < rows && V(r + 1, c)) {
        const double s = w1 * sign(D(r + 1, c) - D(r, c));
        g(r + 1, c) += s;
        g(r, c) -= s;
      }
      if (r > 0 && c > 0 && r + 1 < rows && c + 1 < cols && V(r, c + 1) && V(r, c - 1) &&
          V(r + 1, c) && V(r - 1, c)) {
        const double lap = D(r, c + 1) + D(r, c - 1) + D(r + 1, c) + D(r - 1, c) - 4.0 * D(r, c);
        const double s = ew.second(r, c) * inv_n * sign(lap);
        g(r, c + 1) += s;
        g(r, c - 1) += s;
        g(r + 1, c) += s;
        g(r - 1, c) += s;
        g(r, c) -= 4.0 * s;
      }
    }
  return g;
}

double synthesis_loss(const CameraView& view_i, const CameraView& view_j, const DepthMap& depth_i,
                      const DepthMap& depth_j, const Mask& mask_ij, const Mask& mask_ji,
                      const LossWeights& w) {
  auto unary = [&](const CameraView& tgt, const CameraView& src, const DepthMap& d,
                   const Mask& m) {
    const Sampled syn = synthesize_view(d, src, tgt);
    const Mask all = Mask::Constant(tgt.rows(), tgt.cols(), true);
    auto res = compare_images(tgt.image, all, syn.image, syn.valid, m && syn.valid, w, false);
    return res ? res->value : 0.0;
  };
  const double lu_ij = unary(view_i, view_j, depth_i, mask_ij);
  const double lu_ji = unary(view_j, view_i, depth_j, mask_ji);
  const double ls = smoothness_loss(view_i.image, depth_i, w) + smoothness_loss(view_j.image, depth_j, w);
  return w.omega_u * (lu_ij + lu_ji) + w.omega_s * ls / 2.0;
}

}  // namespace symvs
