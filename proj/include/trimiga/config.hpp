#ifndef TRIMIGA_CONFIG_HPP
#define TRIMIGA_CONFIG_HPP

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trimiga/core.hpp"

namespace trimiga {

/// Flat key=value experiment configuration ('#' starts a comment).
struct ExperimentConfig {
  std::string experiment;  // stability | convergence | conditioning | solve
  std::string geometry = "identity";
  double geom_x0 = 0.0, geom_x1 = 1.0, geom_y0 = 0.0, geom_y1 = 1.0;  // affine box

  std::string region_kind = "none";  // half_plane | disk | rect_remove | rotated_rect
  int region_axis = 1;
  double region_threshold = 0.5;
  bool region_keep_below = true;
  double region_eps = 0.0;  // added to the half-plane threshold
  double region_cx = 0.0, region_cy = 0.0, region_radius = 0.5;
  bool region_keep_outside = true;
  double region_x0 = 0.0, region_y0 = 0.0, region_x1 = 1.0, region_y1 = 1.0;
  double region_hx = 0.5, region_hy = 0.5, region_alpha = 0.0;

  int degree = 2;
  std::vector<int> levels;
  std::vector<double> eps_list;
  double theta = 1.0;
  double beta = 1.0;
  std::string stab_mode = "parametric";  // none | parametric | physical
  std::string solution = "zero";
  int quad_order = 0;  // 0: default p+2
  std::string out = "";
  std::vector<double> alpha_list;  // conditioning test 3 rotation angles

  int effective_quad_order() const { return quad_order > 0 ? quad_order : degree + 2; }
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw config_error("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

inline int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  const int i = static_cast<int>(d);
  if (i != d) throw config_error("config: " + key + " must be an integer");
  return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw config_error("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto a = line.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r\n");
      const auto y = s.find_last_not_of(" \t\r\n");
      return (x == std::string::npos) ? std::string() : s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw config_error("config: duplicate key " + key);

    using detail::split_csv;
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    if (key == "experiment") cfg.experiment = val;
    else if (key == "geometry") cfg.geometry = val;
    else if (key == "geometry.x0") cfg.geom_x0 = to_double(key, val);
    else if (key == "geometry.x1") cfg.geom_x1 = to_double(key, val);
    else if (key == "geometry.y0") cfg.geom_y0 = to_double(key, val);
    else if (key == "geometry.y1") cfg.geom_y1 = to_double(key, val);
    else if (key == "region.kind") cfg.region_kind = val;
    else if (key == "region.axis") cfg.region_axis = to_int(key, val);
    else if (key == "region.threshold") cfg.region_threshold = to_double(key, val);
    else if (key == "region.keep_below") cfg.region_keep_below = to_bool(key, val);
    else if (key == "region.eps") cfg.region_eps = to_double(key, val);
    else if (key == "region.cx") cfg.region_cx = to_double(key, val);
    else if (key == "region.cy") cfg.region_cy = to_double(key, val);
    else if (key == "region.radius") cfg.region_radius = to_double(key, val);
    else if (key == "region.keep_outside") cfg.region_keep_outside = to_bool(key, val);
    else if (key == "region.x0") cfg.region_x0 = to_double(key, val);
    else if (key == "region.y0") cfg.region_y0 = to_double(key, val);
    else if (key == "region.x1") cfg.region_x1 = to_double(key, val);
    else if (key == "region.y1") cfg.region_y1 = to_double(key, val);
    else if (key == "region.hx") cfg.region_hx = to_double(key, val);
    else if (key == "region.hy") cfg.region_hy = to_double(key, val);
    else if (key == "region.alpha") cfg.region_alpha = to_double(key, val);
    else if (key == "degree") cfg.degree = to_int(key, val);
    else if (key == "levels") {
      for (const auto& v : split_csv(val)) cfg.levels.push_back(to_int(key, v));
    } else if (key == "eps_list") {
      for (const auto& v : split_csv(val)) cfg.eps_list.push_back(to_double(key, v));
    } else if (key == "alpha_list") {
      for (const auto& v : split_csv(val)) cfg.alpha_list.push_back(to_double(key, v));
    } else if (key == "theta") cfg.theta = to_double(key, val);
    else if (key == "beta") cfg.beta = to_double(key, val);
    else if (key == "stab_mode") cfg.stab_mode = val;
    else if (key == "solution") cfg.solution = val;
    else if (key == "quad_order") cfg.quad_order = to_int(key, val);
    else if (key == "out") cfg.out = val;
    else throw config_error("config: unknown key " + key);
  }
  if (cfg.degree < 1 || cfg.degree > 3)
    throw config_error("config: degree must be 1, 2 or 3");
  if (cfg.stab_mode != "none" && cfg.stab_mode != "parametric" && cfg.stab_mode != "physical")
    throw config_error("config: stab_mode must be none|parametric|physical");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config file not found: " + path);
  return parse_config(in);
}

}  // namespace trimiga

#endif
