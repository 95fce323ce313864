#include "symvs/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "symvs/errors.hpp"
#include "symvs/io.hpp"

namespace symvs {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double to_double(const std::string& t, int line) {
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = t.data() + (!t.empty() && t[0] == '+');
  auto [p, ec] = std::from_chars(b, t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || std::isnan(v))
    throw ParseError("bad number '" + t + "'", line);
  return v;
}

double to_finite(const std::string& t, int line) {
  const double v = to_double(t, line);
  if (!std::isfinite(v)) throw ParseError("value must be finite: '" + t + "'", line);
  return v;
}

long to_long(const std::string& t, int line) {
  long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) throw ParseError("bad integer '" + t + "'", line);
  return v;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn fn) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (!line.empty()) fn(line, n);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  LossWeights& w = cfg.weights;
  SolverConfig& s = cfg.solver;
  using Setter = std::function<void(const std::string&, int)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& v, int ln) { field = to_finite(v, ln); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& v, int ln) { field = static_cast<int>(to_long(v, ln)); };
  };
  const std::map<std::string, Setter> setters = {
      {"omega_u", real(w.omega_u)},
      {"omega_s", real(w.omega_s)},
      {"lambda1", real(w.lambda1)},
      {"lambda2", real(w.lambda2)},
      {"lambda3", real(w.lambda3)},
      {"lambda4", real(w.lambda4)},
      {"lambda5", real(w.lambda5)},
      {"lambda6", real(w.lambda6)},
      {"alpha1", real(w.alpha1)},
      {"alpha2", real(w.alpha2)},
      {"tau_occ", real(w.tau_occ)},
      {"census_window", integer(w.census_window)},
      {"max_outer_iters", integer(s.max_outer_iters)},
      {"inner_steps_per_mask_update", integer(s.inner_steps_per_mask_update)},
      {"step_size", real(s.step_size)},
      {"backtrack_factor", real(s.backtrack_factor)},
      {"max_halvings", integer(s.max_halvings)},
      {"convergence_tol", real(s.convergence_tol)},
      {"armijo_c", real(s.armijo_c)},
      {"temperature", real(s.temperature)},
      {"hyp_count", integer(cfg.hyp_count)},
      {"feature_mode",
       [&s](const std::string& v, int ln) {
         try {
           s.feature_mode = parse_feature_mode(v);
         } catch (const UnknownMode& e) {
           throw ParseError(e.what(), ln);
         }
       }},
      {"smooth_radius",
       [&s](const std::string& v, int ln) {
         const auto t = tokens(v);
         if (t.size() != 3) throw ParseError("smooth_radius takes three integers", ln);
         for (int k = 0; k < 3; ++k) s.smooth_radius[k] = static_cast<int>(to_long(t[k], ln));
       }},
  };
  std::set<std::string> seen;
  for_each_line(text, [&](const std::string& line, int ln) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", ln);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown key '" + key + "'", ln);
    if (!seen.insert(key).second) throw ParseError("repeated key '" + key + "'", ln);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", ln);
    if (key != "smooth_radius" && tokens(value).size() != 1)
      throw ParseError("expected a single value for '" + key + "'", ln);
    it->second(value, ln);
  });
  if (cfg.hyp_count < 2) throw ParseError("hyp_count must be at least 2", 0);
  try {
    validate(cfg.weights);
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string format_run_config(const RunConfig& c) {
  const LossWeights& w = c.weights;
  const SolverConfig& s = c.solver;
  std::string out;
  auto line = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  line("omega_u", fmt17(w.omega_u));
  line("omega_s", fmt17(w.omega_s));
  line("lambda1", fmt17(w.lambda1));
  line("lambda2", fmt17(w.lambda2));
  line("lambda3", fmt17(w.lambda3));
  line("lambda4", fmt17(w.lambda4));
  line("lambda5", fmt17(w.lambda5));
  line("lambda6", fmt17(w.lambda6));
  line("alpha1", fmt17(w.alpha1));
  line("alpha2", fmt17(w.alpha2));
  line("tau_occ", fmt17(w.tau_occ));
  line("census_window", std::to_string(w.census_window));
  line("max_outer_iters", std::to_string(s.max_outer_iters));
  line("inner_steps_per_mask_update", std::to_string(s.inner_steps_per_mask_update));
  line("step_size", fmt17(s.step_size));
  line("backtrack_factor", fmt17(s.backtrack_factor));
  line("max_halvings", std::to_string(s.max_halvings));
  line("convergence_tol", fmt17(s.convergence_tol));
  line("armijo_c", fmt17(s.armijo_c));
  line("temperature", fmt17(s.temperature));
  line("feature_mode", std::string(to_string(s.feature_mode)));
  line("smooth_radius", std::to_string(s.smooth_radius[0]) + " " + std::to_string(s.smooth_radius[1]) +
                            " " + std::to_string(s.smooth_radius[2]));
  line("hyp_count", std::to_string(c.hyp_count));
  return out;
}

SceneSpec parse_scene(const std::string& text) {
  SceneSpec spec;
  spec.primitives.clear();
  spec.cameras.clear();
  bool has_size = false;
  for_each_line(text, [&](const std::string& line, int ln) {
    const auto t = tokens(line);
    const std::string& kw = t[0];
    auto need = [&](std::size_t n) {
      if (t.size() != n + 1)
        throw ParseError("'" + kw + "' takes " + std::to_string(n) + " values", ln);
    };
    if (kw == "size") {
      need(2);
      spec.width = static_cast<int>(to_long(t[1], ln));
      spec.height = static_cast<int>(to_long(t[2], ln));
      if (spec.width < 2 || spec.height < 2) throw ParseError("image must be at least 2x2", ln);
      has_size = true;
    } else if (kw == "seed") {
      need(1);
      std::uint64_t seed = 0;
      auto [p, ec] = std::from_chars(t[1].data(), t[1].data() + t[1].size(), seed);
      if (ec != std::errc() || p != t[1].data() + t[1].size()) throw ParseError("bad seed", ln);
      spec.seed = seed;
    } else if (kw == "depth_range") {
      need(3);
      spec.depth_range = {to_finite(t[1], ln), to_finite(t[2], ln), static_cast<int>(to_long(t[3], ln))};
    } else if (kw == "camera") {
      need(10);
      double v[10];
      for (int k = 0; k < 10; ++k) v[k] = to_finite(t[k + 1], ln);
      spec.cameras.push_back(make_camera(v[0], v[1], v[2], v[3], Eigen::Vector3d(v[4], v[5], v[6]),
                                         Eigen::Vector3d(v[7], v[8], v[9])));
    } else if (kw == "plane") {
      need(15);
      TexturedPlane p;
      double v[15];
      for (int k = 0; k < 15; ++k) v[k] = (k >= 9 && k < 13) ? to_double(t[k + 1], ln) : to_finite(t[k + 1], ln);
      p.origin = {v[0], v[1], v[2]};
      p.u_axis = {v[3], v[4], v[5]};
      p.v_axis = {v[6], v[7], v[8]};
      p.u_min = v[9];
      p.u_max = v[10];
      p.v_min = v[11];
      p.v_max = v[12];
      p.texture_id = static_cast<int>(to_long(t[14], ln));
      p.texture_scale = v[14];
      if (p.u_axis.cross(p.v_axis).norm() == 0.0) throw ParseError("plane axes are parallel", ln);
      if (!(p.texture_scale > 0.0)) throw ParseError("texture scale must be positive", ln);
      spec.primitives.push_back(p);
    } else {
      throw ParseError("unknown scene keyword '" + kw + "'", ln);
    }
  });
  if (!has_size) throw ParseError("scene lacks a 'size' line", 0);
  if (spec.cameras.empty()) throw ParseError("scene has no cameras", 0);
  if (spec.primitives.empty()) throw ParseError("scene has no planes", 0);
  return spec;
}

SceneSpec read_scene(const std::filesystem::path& path) {
  try {
    return parse_scene(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace symvs
