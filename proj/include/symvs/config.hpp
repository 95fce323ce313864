#pragma once

#include <filesystem>
#include <string>

#include "symvs/photometry.hpp"
#include "symvs/scenegen.hpp"
#include "symvs/solver.hpp"

namespace symvs {

/// Settings of one optimize run.  The hypothesis range comes from the
/// first camera file (depth_min, depth_interval) and hyp_count.
struct RunConfig {
  LossWeights weights;
  SolverConfig solver;  // hypotheses are filled in by the caller
  int hyp_count = 64;
};

/// Flat `key = value` lines, `#` comments.  Keys are the LossWeights and
/// SolverConfig field names plus hyp_count; smooth_radius takes three
/// integers.  Unknown keys, repeated keys and bad values raise ParseError.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

/// Line-based scene description:
///   size W H
///   seed N
///   depth_range d_min interval count
///   camera fx fy cx cy rx ry rz tx ty tz
///   plane ox oy oz ux uy uz vx vy vz umin umax vmin vmax texture_id texture_scale
/// `inf` / `-inf` are accepted for plane extents.
SceneSpec parse_scene(const std::string& text);
SceneSpec read_scene(const std::filesystem::path& path);

}  // namespace symvs
