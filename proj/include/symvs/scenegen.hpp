#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "symvs/camera.hpp"
#include "symvs/consistency.hpp"
#include "symvs/types.hpp"
#include "symvs/volume.hpp"

namespace symvs {

/// Plane patch origin + a·u_axis + b·v_axis for a in [u_min, u_max] and
/// b in [v_min, v_max] (infinite bounds allowed).  The texture is indexed
/// by (a, b), so u_axis and v_axis set its world scale together with
/// texture_scale (world units per coarse noise cell).
struct TexturedPlane {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
  double u_min = -std::numeric_limits<double>::infinity();
  double u_max = std::numeric_limits<double>::infinity();
  double v_min = -std::numeric_limits<double>::infinity();
  double v_max = std::numeric_limits<double>::infinity();
  int texture_id = 0;
  double texture_scale = 40.0;
};

struct SceneCamera {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

/// Depth sampling that travels with a scene: d_min, interval, count.
struct DepthRange {
  double d_min = 425.0;
  double interval = 2.6;
  int count = 192;

  DepthHypotheses hypotheses() const { return DepthHypotheses::from_interval(d_min, interval, count); }
};

/// Primitives are listed by precedence: on an exact depth tie the earlier
/// one wins.
struct SceneSpec {
  int width = 64;
  int height = 48;
  std::uint64_t seed = 1;
  std::vector<TexturedPlane> primitives;
  std::vector<SceneCamera> cameras;
  DepthRange depth_range;
};

struct RenderedScene {
  std::vector<CameraView> views;
  std::vector<DepthMap> gt_depths;
  /// (i, j): the point seen by i is in front of j, projects inside j's
  /// frame, and nothing lies between it and j's centre.
  std::map<ViewPair, Mask> visibility;
  /// (i, j): the point seen by i is in front of j and projects inside j's
  /// frame, regardless of occlusion.
  std::map<ViewPair, Mask> in_frame;
};

/// Smooth RGB value noise in [0.1, 0.9], a pure function of its arguments.
Eigen::Vector3d texture_color(std::uint64_t seed, int texture_id, double a, double b,
                              double scale);

/// Upper bound on |grad texture_color| per channel, per texture-plane unit.
inline double texture_gradient_bound(double scale) { return 2.0 * std::sqrt(2.0) / scale; }

/// Ray casts every pixel of every camera.  Pixels that hit nothing have
/// invalid depth and black colour.  Throws InvalidArgument for an empty
/// scene or an invalid camera.
RenderedScene render_scene(const SceneSpec& spec);

/// Camera with rotation given as an axis-angle vector (world to camera).
SceneCamera make_camera(double fx, double fy, double cx, double cy, const Eigen::Vector3d& rvec,
                        const Eigen::Vector3d& t);

/// Three cameras at x = -50, 0, 50 looking down +z at a textured plane
/// z = 600; 64×48, f = 60.  Disparities are exactly 5 px per camera
/// step, and 600 is hypothesis 30 of d_min 450, interval 5, D = 64.
SceneSpec plane_scene();

/// Same rig in front of a background plane z = 750 and a half-plane
/// occluder z = 375 covering world x <= 0.  Disparities are 4 and 8 px.
SceneSpec occluder_scene();

/// Plane scene seen by rotated, non-collinear cameras; no integer
/// disparities.  Used where generic geometry matters.
SceneSpec tilted_scene();

}  // namespace symvs
