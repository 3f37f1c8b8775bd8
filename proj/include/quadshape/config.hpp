#pragma once

// Run configuration: flat key = value lines grouped in [sections].
// '#' starts a comment. [source] may repeat, one disk per block.
// Numbers accept a trailing "pi" factor: "2pi", "0.5pi", "pi".

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "quadshape/errors.hpp"
#include "quadshape/flow.hpp"
#include "quadshape/geometry.hpp"
#include "quadshape/potential.hpp"
#include "quadshape/shape.hpp"

namespace quadshape {

struct GeometryConfig {
  std::string shape = "circle";
  int n = 128;
  double radius = 1.0;
  Point center = Point::Zero();
  double a = 1.0, b = 1.0;
  double r0 = 1.0;
  std::vector<double> cos_coef, sin_coef;

  Curve build() const {
    if (shape == "circle") {
      if (!(radius > 0.0)) throw ValidationError("geometry: radius must be positive");
      return make_circle(n, radius, center);
    }
    if (shape == "ellipse") {
      if (!(a > 0.0 && b > 0.0)) throw ValidationError("geometry: ellipse axes must be positive");
      return make_ellipse(n, a, b, center);
    }
    if (shape == "fourier") return make_fourier(n, r0, cos_coef, sin_coef, center);
    throw ValidationError("geometry: unknown shape '" + shape + "' (circle, ellipse, fourier)");
  }
};

struct RunConfig {
  GeometryConfig geometry;
  std::vector<Disk> disks;
  MetricParams metric;
  ShapeOptions shape;
  std::vector<std::string> directions{"1", "cos1", "cos2", "sin2"};
  double t_step = 0.0;  // 0: 1e-3 * diameter
  PsiReading psi_reading = PsiReading::Printed;
  FlowConfig flow;
  int snapshot_every = 0;
  bool svg = true;
  std::string output_dir = "out";
  bool dump_operators = false;

  SourceTerm source() const { return SourceTerm(disks); }

  /// Everything that can be checked without solving.
  void validate() const {
    metric.validate();
    if (disks.empty()) throw ValidationError("config: at least one [source] block is required");
    source();
    const Curve c = geometry.build();
    source().validate_inside(c);
    if (shape.radial_order < 1 || shape.angular_order < 1)
      throw ValidationError("quadrature: orders must be positive");
    if (!(shape.hadamard_factor > 0.0)) throw ValidationError("hadamard_factor must be positive");
    if (t_step < 0.0) throw ValidationError("fd: t_step must be nonnegative");
    if (shape.sample_offset < 0.0) throw ValidationError("fd: sample_offset must be nonnegative");
    if (snapshot_every < 0) throw ValidationError("flow: snapshot_every must be nonnegative");
    for (const auto& d : directions) mode_field(c, d);
    FlowConfig f = flow;
    f.metric = metric;
    f.validate();
  }

  FlowConfig flow_config() const {
    FlowConfig f = flow;
    f.metric = metric;
    f.shape = shape;
    return f;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& raw, const std::string& where) {
  std::string s = trim(raw);
  double factor = 1.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    factor = kPi;
    s = trim(s.substr(0, s.size() - 2));
    if (s.empty() || s == "+") return factor;
    if (s == "-") return -factor;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + raw + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v)) throw ValidationError(where + ": '" + raw + "' is not a number");
  return v * factor;
}

inline int parse_int(const std::string& raw, const std::string& where) {
  const double v = parse_number(raw, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(where + ": '" + raw + "' is not an integer");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError(where + ": '" + raw + "' is not a boolean");
}

inline std::vector<std::string> split_words(const std::string& raw) {
  std::vector<std::string> out;
  std::string word;
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      if (!word.empty()) out.push_back(word);
      word.clear();
    } else {
      word += ch;
    }
  }
  if (!word.empty()) out.push_back(word);
  return out;
}

inline std::vector<double> parse_list(const std::string& raw, const std::string& where) {
  std::vector<double> out;
  for (const auto& w : split_words(raw)) out.push_back(parse_number(w, where));
  return out;
}

inline PsiReading parse_psi_reading(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "printed") return PsiReading::Printed;
  if (s == "sampled") return PsiReading::Sampled;
  if (s == "state") return PsiReading::StateSensitivity;
  throw ValidationError("fd.psi_reading: expected printed, sampled or state, got '" + raw + "'");
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  using namespace detail;
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;  // section.key, reset for each [source] block
  std::string line;
  int lineno = 0;
  bool source_open = false;
  Disk disk;
  std::set<std::string> disk_keys;

  auto close_source = [&] {
    if (!source_open) return;
    for (const char* key : {"rho", "mass"})
      if (!disk_keys.count(key)) throw ValidationError(std::string("[source]: missing key '") + key + "'");
    cfg.disks.push_back(disk);
    source_open = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(lineno);

    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(at + ": malformed section header");
      close_source();
      section = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known{"geometry", "source", "problem", "quadrature",
                                               "directions", "fd",     "flow",    "output"};
      if (!known.count(section)) throw ValidationError(at + ": unknown section [" + section + "]");
      if (section == "source") {
        source_open = true;
        disk = Disk{};
        disk_keys.clear();
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(at + ": expected key = value");
    if (section.empty()) throw ValidationError(at + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = section + "." + key;
    if (section == "source") {
      if (!disk_keys.insert(key).second) throw ValidationError(at + ": duplicate key " + where);
    } else if (!seen.insert(where).second) {
      throw ValidationError(at + ": duplicate key " + where);
    }
    auto unknown = [&] { throw ValidationError(at + ": unknown key " + where); };

    if (section == "geometry") {
      auto& g = cfg.geometry;
      if (key == "shape") g.shape = value;
      else if (key == "N") g.n = parse_int(value, where);
      else if (key == "radius") g.radius = parse_number(value, where);
      else if (key == "center") {
        const auto v = parse_list(value, where);
        if (v.size() != 2) throw ValidationError(where + ": expected two numbers");
        g.center = Point(v[0], v[1]);
      } else if (key == "a") g.a = parse_number(value, where);
      else if (key == "b") g.b = parse_number(value, where);
      else if (key == "r0") g.r0 = parse_number(value, where);
      else if (key == "cos") g.cos_coef = parse_list(value, where);
      else if (key == "sin") g.sin_coef = parse_list(value, where);
      else unknown();
    } else if (section == "source") {
      if (key == "cx") disk.center.x() = parse_number(value, where);
      else if (key == "cy") disk.center.y() = parse_number(value, where);
      else if (key == "rho") disk.radius = parse_number(value, where);
      else if (key == "mass") disk.mass = parse_number(value, where);
      else unknown();
    } else if (section == "problem") {
      if (key == "k") cfg.metric.k = parse_number(value, where);
      else if (key == "A") cfg.metric.A = parse_number(value, where);
      else if (key == "hadamard_factor") cfg.shape.hadamard_factor = parse_number(value, where);
      else unknown();
    } else if (section == "quadrature") {
      if (key == "radial") cfg.shape.radial_order = parse_int(value, where);
      else if (key == "angular") cfg.shape.angular_order = parse_int(value, where);
      else unknown();
    } else if (section == "directions") {
      if (key == "modes") {
        cfg.directions = split_words(value);
        if (cfg.directions.empty()) throw ValidationError(where + ": empty list");
      } else unknown();
    } else if (section == "fd") {
      if (key == "t_step") cfg.t_step = parse_number(value, where);
      else if (key == "psi_reading") cfg.psi_reading = parse_psi_reading(value);
      else if (key == "sample_offset") cfg.shape.sample_offset = parse_number(value, where);
      else unknown();
    } else if (section == "flow") {
      auto& f = cfg.flow;
      if (key == "tau0") f.tau0 = parse_number(value, where);
      else if (key == "c1") f.armijo_c1 = parse_number(value, where);
      else if (key == "shrink") f.shrink = parse_number(value, where);
      else if (key == "max_backtracks") f.max_backtracks = parse_int(value, where);
      else if (key == "resample_every") f.resample_every = parse_int(value, where);
      else if (key == "grad_tol") f.grad_tol = parse_number(value, where);
      else if (key == "grad_rtol") f.grad_rtol = parse_number(value, where);
      else if (key == "max_iterations") f.max_iterations = parse_int(value, where);
      else if (key == "snapshot_every") cfg.snapshot_every = parse_int(value, where);
      else if (key == "svg") cfg.svg = parse_bool(value, where);
      else unknown();
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = value;
      else if (key == "dump_operators") cfg.dump_operators = parse_bool(value, where);
      else unknown();
    }
  }
  close_source();
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace quadshape
