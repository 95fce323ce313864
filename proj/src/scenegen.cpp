#include "symvs/scenegen.hpp"

#include <cmath>

#include "symvs/errors.hpp"

namespace symvs {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lattice value in [0, 1).
double lattice(std::uint64_t key, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = splitmix64(key ^ splitmix64(static_cast<std::uint64_t>(ix)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t key, double a, double b) {
  const double fa = std::floor(a), fb = std::floor(b);
  const auto ia = static_cast<std::int64_t>(fa), ib = static_cast<std::int64_t>(fb);
  const double u = fade(a - fa), v = fade(b - fb);
  const double v00 = lattice(key, ia, ib), v10 = lattice(key, ia + 1, ib);
  const double v01 = lattice(key, ia, ib + 1), v11 = lattice(key, ia + 1, ib + 1);
  return (1.0 - v) * ((1.0 - u) * v00 + u * v10) + v * ((1.0 - u) * v01 + u * v11);
}

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  int primitive = -1;
  double a = 0.0, b = 0.0;
};

// Ray C + s·dir against every primitive; nearest s > s_min wins, ties go
// to the earlier primitive.
Hit cast(const std::vector<TexturedPlane>& prims, const Eigen::Vector3d& C,
         const Eigen::Vector3d& dir, double s_min) {
  Hit best;
  for (std::size_t k = 0; k < prims.size(); ++k) {
    const TexturedPlane& p = prims[k];
    const Eigen::Vector3d n = p.u_axis.cross(p.v_axis);
    const double denom = n.dot(dir);
    if (denom == 0.0) continue;
    const double s = n.dot(p.origin - C) / denom;
    if (!(s > s_min) || !(s < best.s)) continue;
    const Eigen::Vector3d d = C + s * dir - p.origin;
    const double a = d.dot(p.u_axis) / p.u_axis.squaredNorm();
    const double b = d.dot(p.v_axis) / p.v_axis.squaredNorm();
    if (a < p.u_min || a > p.u_max || b < p.v_min || b > p.v_max) continue;
    best = {s, static_cast<int>(k), a, b};
  }
  return best;
}

SceneCamera rig_camera(double cx_world) {
  return make_camera(60.0, 60.0, 31.5, 23.5, Eigen::Vector3d::Zero(),
                     Eigen::Vector3d(-cx_world, 0.0, 0.0));
}

}  // namespace

Eigen::Vector3d texture_color(std::uint64_t seed, int texture_id, double a, double b,
                              double scale) {
  Eigen::Vector3d rgb;
  for (int c = 0; c < 3; ++c) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(texture_id) << 8) | c));
    const double coarse = value_noise(key, a / scale, b / scale);
    const double fine = value_noise(splitmix64(key), 2.0 * a / scale, 2.0 * b / scale);
    rgb[c] = 0.1 + 0.8 * (coarse + 0.5 * fine) / 1.5;
  }
  return rgb;
}

SceneCamera make_camera(double fx, double fy, double cx, double cy, const Eigen::Vector3d& rvec,
                        const Eigen::Vector3d& t) {
  SceneCamera cam;
  cam.K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  const double angle = rvec.norm();
  cam.R = angle == 0.0 ? Eigen::Matrix3d::Identity()
                       : Eigen::AngleAxisd(angle, rvec / angle).toRotationMatrix();
  cam.t = t;
  return cam;
}

RenderedScene render_scene(const SceneSpec& spec) {
  if (spec.primitives.empty()) throw InvalidArgument("scene has no primitives");
  if (spec.cameras.empty()) throw InvalidArgument("scene has no cameras");
  if (spec.width < 2 || spec.height < 2) throw InvalidArgument("image must be at least 2x2");
  const int rows = spec.height, cols = spec.width, n = static_cast<int>(spec.cameras.size());

  RenderedScene out;
  std::vector<Plane> px(n), py(n), pz(n);  // world point seen by each pixel
  for (const SceneCamera& sc : spec.cameras) {
    CameraView view{sc.K, sc.R, sc.t, Image(rows, cols, 3)};
    validate(view);
    const Eigen::Matrix3d K_inv = inverse_intrinsics(sc.K);
    const Eigen::Vector3d C = view.center();
    DepthMap depth(Plane::Zero(rows, cols), Mask::Constant(rows, cols, false));
    const int v = static_cast<int>(out.views.size());
    px[v] = py[v] = pz[v] = Plane::Zero(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const Eigen::Vector3d dir = sc.R.transpose() * (K_inv * Eigen::Vector3d(c, r, 1.0));
        const Hit h = cast(spec.primitives, C, dir, 0.0);
        if (h.primitive < 0) continue;
        const TexturedPlane& p = spec.primitives[h.primitive];
        // The camera-frame ray has unit z, so s is the depth.
        depth.values(r, c) = h.s;
        depth.valid(r, c) = true;
        const Eigen::Vector3d X = C + h.s * dir;
        px[v](r, c) = X.x();
        py[v](r, c) = X.y();
        pz[v](r, c) = X.z();
        const Eigen::Vector3d rgb = texture_color(spec.seed, p.texture_id, h.a, h.b, p.texture_scale);
        for (int ch = 0; ch < 3; ++ch) view.image(r, c, ch) = rgb[ch];
      }
    out.views.push_back(std::move(view));
    out.gt_depths.push_back(std::move(depth));
  }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Mask vis = Mask::Constant(rows, cols, false), inf = vis;
      const CameraView& cj = out.views[j];
      const Eigen::Vector3d Cj = cj.center();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          if (!out.gt_depths[i].valid(r, c)) continue;
          const Eigen::Vector3d X(px[i](r, c), py[i](r, c), pz[i](r, c));
          const Eigen::Vector3d Xc = cj.R * X + cj.t;
          if (!(Xc.z() > 0.0)) continue;
          const Eigen::Vector2d q = project(cj.K, Xc);
          // Points exactly on the frame border count as inside despite rounding.
          constexpr double kEdge = 1e-9;
          if (!(q.x() >= -kEdge && q.x() <= cols - 1 + kEdge && q.y() >= -kEdge &&
                q.y() <= rows - 1 + kEdge))
            continue;
          inf(r, c) = true;
          if (i == j) {
            vis(r, c) = true;
            continue;
          }
          const Hit h = cast(spec.primitives, Cj, X - Cj, 0.0);
          vis(r, c) = !(h.s < 1.0 - 1e-9);
        }
      out.visibility.emplace(ViewPair{i, j}, std::move(vis));
      out.in_frame.emplace(ViewPair{i, j}, std::move(inf));
    }
  return out;
}

SceneSpec plane_scene() {
  SceneSpec s;
  s.width = 64;
  s.height = 48;
  s.seed = 7;
  TexturedPlane p;
  p.origin = Eigen::Vector3d(0.0, 0.0, 600.0);
  p.texture_scale = 40.0;
  s.primitives.push_back(p);
  for (double x : {-50.0, 0.0, 50.0}) s.cameras.push_back(rig_camera(x));
  s.depth_range = {450.0, 5.0, 64};
  return s;
}

SceneSpec occluder_scene() {
  SceneSpec s;
  s.width = 64;
  s.height = 48;
  s.seed = 11;
  TexturedPlane occluder;
  occluder.origin = Eigen::Vector3d(0.0, 0.0, 375.0);
  occluder.u_max = 0.0;
  occluder.texture_id = 1;
  occluder.texture_scale = 25.0;
  TexturedPlane background;
  background.origin = Eigen::Vector3d(0.0, 0.0, 750.0);
  background.texture_id = 2;
  background.texture_scale = 50.0;
  s.primitives = {occluder, background};
  for (double x : {-50.0, 0.0, 50.0}) s.cameras.push_back(rig_camera(x));
  s.depth_range = {330.0, 15.0, 64};
  return s;
}

SceneSpec tilted_scene() {
  SceneSpec s;
  s.width = 64;
  s.height = 48;
  s.seed = 3;
  TexturedPlane p;
  p.origin = Eigen::Vector3d(0.0, 0.0, 600.0);
  p.u_axis = Eigen::Vector3d(std::cos(0.3), 0.0, std::sin(0.3));
  p.v_axis = Eigen::Vector3d(0.0, std::cos(0.2), std::sin(0.2));
  p.texture_scale = 80.0;
  s.primitives.push_back(p);
  s.cameras.push_back(make_camera(62.0, 61.0, 32.0, 23.0, Eigen::Vector3d(0.0, 0.04, 0.0),
                                  Eigen::Vector3d(40.0, 5.0, 0.0)));
  s.cameras.push_back(make_camera(62.0, 61.0, 32.0, 23.0, Eigen::Vector3d(0.01, -0.02, 0.01),
                                  Eigen::Vector3d(-35.0, 10.0, 5.0)));
  s.cameras.push_back(make_camera(62.0, 61.0, 32.0, 23.0, Eigen::Vector3d(-0.02, 0.0, -0.01),
                                  Eigen::Vector3d(0.0, -30.0, -10.0)));
  s.depth_range = {400.0, 5.0, 64};
  return s;
}

}  // namespace symvs
