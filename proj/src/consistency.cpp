#include "symvs/consistency.hpp"

#include <cstdio>

#include "symvs/errors.hpp"
#include "symvs/geometry.hpp"

namespace symvs {
namespace {

// Lazily built warping chain over all ordered view pairs.  Naming: T(a, b)
// sends pixels of a into b using D_a, F(a, b) is I_b synthesized in a,
// R(a, b) is F(b, a) synthesized back into a (I_a round-tripped through b),
// WD(a, b) is D_b expressed in view a.
class Chain {
 public:
  Chain(std::span<const CameraView> views, std::span<const DepthMap> depths)
      : views_(views), depths_(depths) {}

  const Transfer& T(int a, int b) {
    auto it = t_.find({a, b});
    if (it == t_.end()) it = t_.emplace(ViewPair{a, b}, compute_transfer(depths_[a], views_[a], views_[b])).first;
    return it->second;
  }

  const Sampled& F(int a, int b) {
    auto it = f_.find({a, b});
    if (it == f_.end()) it = f_.emplace(ViewPair{a, b}, bilinear_sample(views_[b].image, T(a, b).field)).first;
    return it->second;
  }

  const Sampled& R(int a, int b) {
    auto it = r_.find({a, b});
    if (it == r_.end()) {
      const Sampled& f = F(b, a);
      it = r_.emplace(ViewPair{a, b}, bilinear_sample(f.image, f.valid, T(a, b).field)).first;
    }
    return it->second;
  }

  const DepthWarp& WD(int a, int b) {
    auto it = wd_.find({a, b});
    if (it == wd_.end())
      it = wd_.emplace(ViewPair{a, b}, warp_depth_detailed(depths_[b], T(a, b), views_[b], views_[a])).first;
    return it->second;
  }

  // Depth gradient of view a given the loss gradient on F(a, b).
  Plane backward_F(int a, int b, const Image& grad) {
    const Transfer& tr = T(a, b);
    Plane gx = Plane::Zero(tr.field.rows(), tr.field.cols()), gy = gx;
    bilinear_sample_backward(views_[b].image, tr.field, F(a, b).valid, grad, gx, gy, nullptr);
    return gx * tr.dx_ddepth + gy * tr.dy_ddepth;
  }

  // Depth gradients of views a and b given the loss gradient on R(a, b).
  std::pair<Plane, Plane> backward_R(int a, int b, const Image& grad) {
    const Transfer& tr = T(a, b);
    const Sampled& f = F(b, a);
    Plane gx = Plane::Zero(tr.field.rows(), tr.field.cols()), gy = gx;
    Image grad_f(f.image.rows(), f.image.cols(), f.image.num_channels());
    bilinear_sample_backward(f.image, tr.field, R(a, b).valid, grad, gx, gy, &grad_f);
    return {gx * tr.dx_ddepth + gy * tr.dy_ddepth, backward_F(b, a, grad_f)};
  }

 private:
  std::span<const CameraView> views_;
  std::span<const DepthMap> depths_;
  std::map<ViewPair, Transfer> t_;
  std::map<ViewPair, Sampled> f_;
  std::map<ViewPair, Sampled> r_;
  std::map<ViewPair, DepthWarp> wd_;
};

struct DepthTerm {
  double value = 0.0;
  int count = 0;
  Plane grad_i;  // d value / d D_i
  Plane grad_j;  // d value / d D_j
};

// mean phi(D_i - D'_{j->i}) over mask ∧ warp validity.
DepthTerm depth_term(Chain& ch, int i, int j, const DepthMap& di, const DepthMap& dj,
                     const Mask& mask, bool want_gradient) {
  const DepthWarp& wd = ch.WD(i, j);
  const Mask m = mask && di.valid && wd.result.valid;
  DepthTerm out;
  out.count = static_cast<int>(m.count());
  if (out.count == 0) return out;
  const int rows = di.rows(), cols = di.cols();
  double sum = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (m(r, c)) sum += charbonnier(di.values(r, c) - wd.result.values(r, c));
  out.value = sum / out.count;
  if (!want_gradient) return out;

  const Transfer& tr = ch.T(i, j);
  out.grad_i = Plane::Zero(rows, cols);
  out.grad_j = Plane::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!m(r, c)) continue;
      const double g = charbonnier_derivative(di.values(r, c) - wd.result.values(r, c)) / out.count;
      const double gw = -g;
      const detail::Taps t = detail::taps_at(tr.field.x(r, c), tr.field.y(r, c), cols, rows);
      double ds_dx, ds_dy;
      detail::interpolate_gradient(dj.values, t, ds_dx, ds_dy);
      const double gamma = wd.gamma(r, c), s = wd.sampled(r, c);
      const double dx = gw * (ds_dx * gamma + s * wd.g.x());
      const double dy = gw * (ds_dy * gamma + s * wd.g.y());
      out.grad_i(r, c) += g + dx * tr.dx_ddepth(r, c) + dy * tr.dy_ddepth(r, c);
      detail::scatter(out.grad_j, t, gw * gamma);
    }
  return out;
}

void check_inputs(std::span<const CameraView> views, std::span<const DepthMap> depths) {
  if (views.size() < 2) throw TooFewViews("the objective needs at least two views");
  if (depths.size() != views.size())
    throw InvalidArgument("expected one depth map per view");
  validate_same_shape(views);
  for (std::size_t i = 0; i < views.size(); ++i)
    if (depths[i].rows() != views[i].rows() || depths[i].cols() != views[i].cols())
      throw ShapeMismatch("depth map " + std::to_string(i) + " does not match its view");
}

const Mask& mask_for(const MaskSet& masks, int i, int j) {
  auto it = masks.find({i, j});
  if (it == masks.end())
    throw InvalidArgument("missing occlusion mask for pair (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
  return it->second.valid;
}

Mask all_true(const CameraView& v) { return Mask::Constant(v.rows(), v.cols(), true); }

std::string term_key(const char* name, std::initializer_list<int> ids) {
  std::string k = name;
  for (int id : ids) k += "_" + std::to_string(id);
  return k;
}

}  // namespace

OcclusionMask occlusion_mask(const DepthMap& depth_i, const DepthMap& depth_j,
                             const CameraView& cam_i, const CameraView& cam_j, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("occlusion threshold must be positive");
  const DepthMap forward = warp_depth(depth_i, depth_j, cam_i, cam_j);
  const DepthMap back = warp_depth(forward, depth_i, cam_j, cam_i);
  OcclusionMask m;
  m.valid = depth_i.valid && back.valid && (depth_i.values - back.values).abs() <= tau;
  m.valid_count = static_cast<int>(m.valid.count());
  return m;
}

MaskSet compute_masks(std::span<const CameraView> views, std::span<const DepthMap> depths,
                      double tau) {
  check_inputs(views, depths);
  MaskSet out;
  const int v = static_cast<int>(views.size());
  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j) {
      if (i == j) continue;
      OcclusionMask m = occlusion_mask(depths[i], depths[j], views[i], views[j], tau);
      m.i = i;
      m.j = j;
      out.emplace(ViewPair{i, j}, std::move(m));
    }
  return out;
}

double image_consistency_loss(int i, int j, const LossState& s) {
  if (i == j) throw InvalidArgument("image consistency needs two distinct views");
  Chain ch(s.views, s.depths);
  const Sampled& rr = ch.R(j, i);
  auto r = compare_images(s.views[j].image, all_true(s.views[j]), rr.image, rr.valid,
                          mask_for(s.masks, j, i), s.weights, false);
  if (!r) throw EmptyMask("image consistency mask is empty");
  return r->value;
}

double depth_consistency_loss(int i, int j, const LossState& s) {
  if (i == j) throw InvalidArgument("depth consistency needs two distinct views");
  Chain ch(s.views, s.depths);
  const DepthTerm t = depth_term(ch, i, j, s.depths[i], s.depths[j], mask_for(s.masks, i, j), false);
  if (t.count == 0) throw EmptyMask("depth consistency mask is empty");
  return t.value;
}

double brightness_consistency_loss(int i, int j, int k, const LossState& s) {
  if (i == j || i == k || j == k)
    throw InvalidArgument("brightness consistency needs three distinct views");
  Chain ch(s.views, s.depths);
  const Sampled& rj = ch.R(i, j);
  const Sampled& rk = ch.R(i, k);
  auto r = compare_images(rj.image, rj.valid, rk.image, rk.valid,
                          mask_for(s.masks, i, j) && mask_for(s.masks, i, k), s.weights, false);
  if (!r) throw EmptyMask("brightness consistency mask is empty");
  return r->value;
}

namespace {

struct Aggregates {
  std::map<ViewPair, double> synthesis;
  std::map<ViewPair, double> cross_view;
  double consistency = 0.0;
  double total = 0.0;
};

Aggregates aggregate(const LossBreakdown& bd, const LossWeights& w) {
  Aggregates a;
  std::vector<double> syn, cross;
  const int v = static_cast<int>(bd.smoothness.size());
  for (int i = 0; i < v; ++i)
    for (int j = i + 1; j < v; ++j) {
      const double s = w.omega_u * (bd.unary.at({i, j}).value + bd.unary.at({j, i}).value) +
                       w.omega_s * (bd.smoothness.at(i) + bd.smoothness.at(j)) / 2.0;
      std::vector<double> lb;
      for (int k = 0; k < v; ++k)
        if (k != i && k != j) lb.push_back(bd.brightness.at({k, i, j}).value);
      const double c =
          w.lambda5 * (bd.image_consistency.at({i, j}).value + bd.image_consistency.at({j, i}).value) +
          w.lambda6 * (bd.depth_consistency.at({i, j}).value + bd.depth_consistency.at({j, i}).value) +
          canonical_sum(std::move(lb));
      a.synthesis[{i, j}] = s;
      a.cross_view[{i, j}] = c;
      syn.push_back(s);
      cross.push_back(c);
    }
  a.consistency = canonical_sum(std::move(cross));
  a.total = canonical_sum(std::move(syn)) + a.consistency;
  return a;
}

}  // namespace

ObjectiveValue evaluate_objective(std::span<const CameraView> views,
                                  std::span<const DepthMap> depths, const MaskSet& masks,
                                  const LossWeights& w, bool want_gradient, CensusCache* census) {
  check_inputs(views, depths);
  const int v = static_cast<int>(views.size());
  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j)
      if (i != j) mask_for(masks, i, j);

  Chain ch(views, depths);
  ObjectiveValue out;
  LossBreakdown& bd = out.breakdown;
  std::vector<std::vector<Plane>> parts(v);
  auto add_part = [&](int view, double weight, const Plane& p) {
    if (weight != 0.0) parts[view].push_back(weight * p);
  };
  auto compare = [&](const std::string& key, const Image& x, const Mask& xv, const Image& y,
                     const Mask& yv, const Mask& m) {
    const Plane* frozen = nullptr;
    if (census) {
      auto it = census->find(key);
      if (it != census->end()) frozen = &it->second;
    }
    auto r = compare_images(x, xv, y, yv, m, w, want_gradient, frozen);
    if (r && census && !frozen) census->emplace(key, r->census_distance);
    return r;
  };

  for (int a = 0; a < v; ++a)
    for (int b = 0; b < v; ++b) {
      if (a == b) continue;
      const Sampled& f = ch.F(a, b);
      auto r = compare(term_key("u", {a, b}), views[a].image, all_true(views[a]), f.image, f.valid,
                       mask_for(masks, a, b));
      bd.unary[{a, b}] = r ? TermValue{r->value, false} : TermValue{0.0, true};
      if (r && want_gradient) add_part(a, w.omega_u, ch.backward_F(a, b, r->grad_y));
    }

  const double smooth_weight = w.omega_s * (v - 1) / 2.0;
  for (int i = 0; i < v; ++i) {
    bd.smoothness[i] = smoothness_loss(views[i].image, depths[i], w);
    if (want_gradient) add_part(i, smooth_weight, smoothness_gradient(views[i].image, depths[i], w));
  }

  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j) {
      if (i == j) continue;
      // L_m^{i,j} lives in view j.
      const Sampled& rr = ch.R(j, i);
      auto r = compare(term_key("m", {i, j}), views[j].image, all_true(views[j]), rr.image,
                       rr.valid, mask_for(masks, j, i));
      bd.image_consistency[{i, j}] = r ? TermValue{r->value, false} : TermValue{0.0, true};
      if (r && want_gradient && w.lambda5 != 0.0) {
        auto [gj, gi] = ch.backward_R(j, i, r->grad_y);
        add_part(j, w.lambda5, gj);
        add_part(i, w.lambda5, gi);
      }
    }

  for (int i = 0; i < v; ++i)
    for (int j = 0; j < v; ++j) {
      if (i == j) continue;
      const DepthTerm t = depth_term(ch, i, j, depths[i], depths[j], mask_for(masks, i, j),
                                     want_gradient && w.lambda6 != 0.0);
      bd.depth_consistency[{i, j}] = t.count ? TermValue{t.value, false} : TermValue{0.0, true};
      if (t.count && want_gradient && w.lambda6 != 0.0) {
        add_part(i, w.lambda6, t.grad_i);
        add_part(j, w.lambda6, t.grad_j);
      }
    }

  for (int j = 0; j < v; ++j)
    for (int k = j + 1; k < v; ++k)
      for (int a = 0; a < v; ++a) {
        if (a == j || a == k) continue;
        const Sampled& rj = ch.R(a, j);
        const Sampled& rk = ch.R(a, k);
        auto r = compare(term_key("b", {a, j, k}), rj.image, rj.valid, rk.image, rk.valid,
                         mask_for(masks, a, j) && mask_for(masks, a, k));
        bd.brightness[{a, j, k}] = r ? TermValue{r->value, false} : TermValue{0.0, true};
        if (r && want_gradient) {
          auto [ga1, gj] = ch.backward_R(a, j, r->grad_x);
          auto [ga2, gk] = ch.backward_R(a, k, r->grad_y);
          add_part(a, 1.0, ga1);
          add_part(a, 1.0, ga2);
          add_part(j, 1.0, gj);
          add_part(k, 1.0, gk);
        }
      }

  Aggregates agg = aggregate(bd, w);
  bd.synthesis = std::move(agg.synthesis);
  bd.cross_view = std::move(agg.cross_view);
  bd.consistency = agg.consistency;
  bd.total = agg.total;

  if (want_gradient) {
    out.gradient.resize(v);
    for (int i = 0; i < v; ++i) {
      out.gradient[i] = parts[i].empty() ? Plane::Zero(depths[i].rows(), depths[i].cols())
                                         : canonical_sum(parts[i]);
      out.gradient[i] = depths[i].valid.select(out.gradient[i], 0.0);
    }
  }
  return out;
}

double LossBreakdown::recompute_total(const LossWeights& w) const { return aggregate(*this, w).total; }

LossBreakdown::Contributions LossBreakdown::contributions(const LossWeights& w) const {
  Contributions c;
  const int v = static_cast<int>(smoothness.size());
  std::vector<double> u, s, m, d, b;
  for (const auto& [k, t] : unary) u.push_back(t.value);
  for (const auto& [k, t] : smoothness) s.push_back(t);
  for (const auto& [k, t] : image_consistency) m.push_back(t.value);
  for (const auto& [k, t] : depth_consistency) d.push_back(t.value);
  for (const auto& [k, t] : brightness) b.push_back(t.value);
  c.unary = w.omega_u * canonical_sum(u);
  c.smoothness = w.omega_s * (v - 1) / 2.0 * canonical_sum(s);
  c.image = w.lambda5 * canonical_sum(m);
  c.depth = w.lambda6 * canonical_sum(d);
  c.brightness = canonical_sum(b);
  return c;
}

std::string LossBreakdown::report() const {
  std::string out, skipped;
  auto line = [&](const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += key + "=" + buf + "\n";
  };
  auto term = [&](const std::string& key, const TermValue& t) {
    line(key, t.value);
    if (t.skipped) skipped += (skipped.empty() ? "" : ",") + key;
  };
  for (const auto& [p, t] : unary) term(term_key("Lu", {p.first, p.second}), t);
  for (const auto& [i, t] : smoothness) line(term_key("Ls", {i}), t);
  for (const auto& [p, t] : image_consistency) term(term_key("Lm", {p.first, p.second}), t);
  for (const auto& [p, t] : depth_consistency) term(term_key("Ld", {p.first, p.second}), t);
  for (const auto& [k, t] : brightness) term(term_key("Lb", {k[0], k[1], k[2]}), t);
  for (const auto& [p, t] : synthesis) line(term_key("Lsyn", {p.first, p.second}), t);
  for (const auto& [p, t] : cross_view) line(term_key("Lc", {p.first, p.second}), t);
  line("Lconsistency", consistency);
  line("total", total);
  out += "skipped=" + skipped + "\n";
  return out;
}

LossBreakdown total_loss(const LossState& state) {
  return evaluate_objective(state.views, state.depths, state.masks, state.weights, false).breakdown;
}

}  // namespace symvs
