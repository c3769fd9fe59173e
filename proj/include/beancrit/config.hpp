#pragma once
// Scenario configuration read from TOML. Every validation failure raises
// ConfigError with the dotted key that caused it, and unknown keys are
// rejected so typos do not silently fall back to defaults.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <toml.hpp>

#include "beancrit/convex_body.hpp"
#include "beancrit/core.hpp"
#include "beancrit/domain.hpp"
#include "beancrit/drive.hpp"

namespace beancrit {

struct OmegaSpec {
  std::string preset = "disk";  // disk | ellipse | cassini_oval | perturbed_disk
  double radius = 1.0;
  double a = 1.0, b = 1.0;
  std::vector<FourierMode> modes;
  Vec2 center;
  std::size_t samples = 2048;
};

struct BodySpec {
  std::string shape = "disk";  // disk | ellipse | parametric
  double radius = 1.0;
  double a = 1.0, b = 1.0;
  Vec2 center;
  std::filesystem::path csv;
};

/// Data of the `step` subcommand: constant c, c * d, c + g.x, or a grid CSV.
struct UbarSpec {
  std::string kind = "constant";  // constant | distance | affine | csv
  double value = 1.0;
  Vec2 slope;
  std::filesystem::path csv;
};

struct ScenarioConfig {
  std::filesystem::path source;
  OmegaSpec omega;
  BodySpec body;
  std::size_t resolution = 256;
  std::optional<DriveProfile> drive;
  std::string initial = "zero";  // zero | csv
  std::filesystem::path initial_csv;
  UbarSpec ubar;
  std::size_t competitors = 40;
  std::vector<double> times;
  std::size_t time_samples = 5;
  bool fronts = true;
  std::size_t per_piece = 64;
  std::size_t snapshots = 6;
  std::vector<double> p_list{4, 8, 16, 32, 64};
  std::size_t gamma_iterations = 200;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
};

namespace config_detail {

[[noreturn]] inline void fail(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ConfigError, key + ": " + why);
}

inline void only_keys(const toml::table& t, const std::string& prefix, std::set<std::string> allowed) {
  for (const auto& [k, v] : t) {
    const std::string name(k.str());
    if (!allowed.count(name)) fail(prefix.empty() ? name : prefix + "." + name, "unknown key");
  }
}

inline const toml::table* table(const toml::table& root, const std::string& key, bool required) {
  const toml::node* n = root.get(key);
  if (!n) {
    if (required) fail(key, "missing table");
    return nullptr;
  }
  if (!n->is_table()) fail(key, "must be a table");
  return n->as_table();
}

inline double number(const toml::node& n, const std::string& key) {
  if (auto v = n.value<double>()) return *v;  // integers convert too
  fail(key, "must be a number");
}

inline double get_number(const toml::table& t, const std::string& prefix, const std::string& key,
                         std::optional<double> fallback = std::nullopt) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    fail(prefix + "." + key, "missing");
  }
  return number(*n, prefix + "." + key);
}

inline std::size_t get_count(const toml::table& t, const std::string& prefix, const std::string& key,
                             std::size_t fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  const auto v = n->value_exact<std::int64_t>();
  if (!v || *v < 0) fail(prefix + "." + key, "must be a non-negative integer");
  return static_cast<std::size_t>(*v);
}

inline std::string get_string(const toml::table& t, const std::string& prefix, const std::string& key,
                              std::optional<std::string> fallback = std::nullopt) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    fail(prefix + "." + key, "missing");
  }
  const auto v = n->value_exact<std::string>();
  if (!v) fail(prefix + "." + key, "must be a string");
  return *v;
}

inline std::vector<double> get_numbers(const toml::table& t, const std::string& prefix, const std::string& key) {
  const toml::node* n = t.get(key);
  const std::string name = prefix + "." + key;
  if (!n || !n->is_array()) fail(name, "must be an array of numbers");
  std::vector<double> out;
  std::size_t i = 0;
  for (const auto& e : *n->as_array()) out.push_back(number(e, name + "[" + std::to_string(i++) + "]"));
  return out;
}

inline Vec2 get_point(const toml::table& t, const std::string& prefix, const std::string& key) {
  if (!t.get(key)) return {};
  const auto v = get_numbers(t, prefix, key);
  if (v.size() != 2) fail(prefix + "." + key, "must have two entries");
  return {v[0], v[1]};
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

inline OmegaSpec parse_omega(const toml::table& t) {
  only_keys(t, "omega", {"preset", "radius", "a", "b", "modes", "center", "samples"});
  OmegaSpec s;
  s.preset = get_string(t, "omega", "preset");
  if (!one_of(s.preset, {"disk", "ellipse", "cassini_oval", "perturbed_disk"}))
    fail("omega.preset", "unknown preset '" + s.preset + "'");
  s.center = get_point(t, "omega", "center");
  s.samples = get_count(t, "omega", "samples", 2048);
  if (s.samples < 64) fail("omega.samples", "need at least 64 boundary samples");
  if (s.preset == "disk" || s.preset == "perturbed_disk") s.radius = get_number(t, "omega", "radius", 1.0);
  if (s.preset == "ellipse" || s.preset == "cassini_oval") {
    s.a = get_number(t, "omega", "a");
    s.b = get_number(t, "omega", "b");
  }
  if (s.preset == "perturbed_disk") {
    const toml::node* n = t.get("modes");
    if (!n || !n->is_array()) fail("omega.modes", "must be an array of [k, amplitude, phase]");
    std::size_t i = 0;
    for (const auto& m : *n->as_array()) {
      const std::string key = "omega.modes[" + std::to_string(i++) + "]";
      const auto* arr = m.as_array();
      if (!arr || arr->size() != 3) fail(key, "must be [k, amplitude, phase]");
      const auto k = (*arr)[0].value_exact<std::int64_t>();
      if (!k || *k < 1) fail(key, "k must be a positive integer");
      s.modes.push_back({static_cast<int>(*k), number((*arr)[1], key), number((*arr)[2], key)});
    }
  }
  return s;
}

inline BodySpec parse_body(const toml::table& t, const std::filesystem::path& base) {
  only_keys(t, "K", {"shape", "radius", "a", "b", "center", "csv"});
  BodySpec s;
  s.shape = get_string(t, "K", "shape");
  if (!one_of(s.shape, {"disk", "ellipse", "parametric"})) fail("K.shape", "unknown shape '" + s.shape + "'");
  s.center = get_point(t, "K", "center");
  if (s.shape == "disk") s.radius = get_number(t, "K", "radius", 1.0);
  if (s.shape == "ellipse") {
    s.a = get_number(t, "K", "a");
    s.b = get_number(t, "K", "b");
  }
  if (s.shape == "parametric") s.csv = resolve(base, get_string(t, "K", "csv"));
  return s;
}

inline DriveProfile parse_drive(const toml::table& t) {
  only_keys(t, "drive", {"pieces"});
  const toml::node* n = t.get("pieces");
  if (!n || !n->is_array_of_tables()) fail("drive.pieces", "must be an array of tables");
  std::vector<DrivePiece> pieces;
  std::size_t i = 0;
  for (const auto& e : *n->as_array()) {
    const std::string prefix = "drive.pieces[" + std::to_string(i++) + "]";
    const toml::table& p = *e.as_table();
    const std::string kind = get_string(p, prefix, "kind");
    if (kind == "linear") {
      only_keys(p, prefix, {"kind", "t0", "t1", "H0", "H1"});
      const double t0 = get_number(p, prefix, "t0"), t1 = get_number(p, prefix, "t1");
      if (!(t1 > t0)) fail(prefix + ".t1", "must exceed t0");
      pieces.push_back(DriveProfile::linear_piece(t0, t1, get_number(p, prefix, "H0"), get_number(p, prefix, "H1")));
    } else if (kind == "custom-samples") {
      only_keys(p, prefix, {"kind", "samples"});
      const toml::node* s = p.get("samples");
      if (!s || !s->is_array()) fail(prefix + ".samples", "must be an array of [t, H]");
      std::vector<std::pair<double, double>> pts;
      std::size_t j = 0;
      for (const auto& q : *s->as_array()) {
        const std::string key = prefix + ".samples[" + std::to_string(j++) + "]";
        const auto* arr = q.as_array();
        if (!arr || arr->size() != 2) fail(key, "must be [t, H]");
        pts.emplace_back(number((*arr)[0], key), number((*arr)[1], key));
      }
      if (pts.size() < 2) fail(prefix + ".samples", "need at least two samples");
      for (std::size_t k = 1; k < pts.size(); ++k)
        if (!(pts[k].first > pts[k - 1].first)) fail(prefix + ".samples", "times must increase");
      pieces.push_back(DriveProfile::sampled_piece(pts));
    } else {
      fail(prefix + ".kind", "must be 'linear' or 'custom-samples'");
    }
  }
  try {
    DriveProfile d(std::move(pieces));
    for (std::size_t k = 0; k < d.pieces().size(); ++k) d.direction(k);
    return d;
  } catch (const Error& e) {
    fail("drive.pieces", e.what());
  }
}

inline std::uint64_t parse_seed(const toml::node& n) {
  const auto v = n.value_exact<std::int64_t>();
  if (!v || *v < 0) fail("seed", "must be a non-negative integer");
  return static_cast<std::uint64_t>(*v);
}

}  // namespace config_detail

inline bool valid_resolution(std::int64_t r) { return r >= 64 && r <= 2048 && (r & (r - 1)) == 0; }

/// Parses a scenario from TOML text. Relative paths resolve against `base`.
inline ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base = ".",
                                   const std::filesystem::path& source = {}) {
  using namespace config_detail;
  toml::table root;
  try {
    root = toml::parse(text, source.string());
  } catch (const toml::parse_error& e) {
    const auto& at = e.source().begin;
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(at.line) + ": " + std::string(e.description()));
  }
  only_keys(root, "", {"seed", "omega", "K", "grid", "drive", "initial", "step", "evolve", "hysteresis", "gamma",
                       "output"});
  ScenarioConfig c;
  c.source = source;
  if (const toml::node* n = root.get("seed")) c.seed = parse_seed(*n);
  c.omega = parse_omega(*table(root, "omega", true));
  c.body = parse_body(*table(root, "K", true), base);

  if (const toml::table* g = table(root, "grid", false)) {
    only_keys(*g, "grid", {"resolution"});
    if (const toml::node* n = g->get("resolution")) {
      const auto r = n->value_exact<std::int64_t>();
      if (!r || !valid_resolution(*r)) fail("grid.resolution", "must be a power of two between 64 and 2048");
      c.resolution = static_cast<std::size_t>(*r);
    }
  }
  if (const toml::table* d = table(root, "drive", false)) c.drive = parse_drive(*d);

  if (const toml::table* t = table(root, "initial", false)) {
    only_keys(*t, "initial", {"kind", "csv"});
    c.initial = get_string(*t, "initial", "kind", "zero");
    if (!one_of(c.initial, {"zero", "csv"})) fail("initial.kind", "must be 'zero' or 'csv'");
    if (c.initial == "csv") c.initial_csv = resolve(base, get_string(*t, "initial", "csv"));
  }
  if (const toml::table* t = table(root, "step", false)) {
    only_keys(*t, "step", {"ubar", "value", "slope", "csv", "competitors"});
    c.ubar.kind = get_string(*t, "step", "ubar", "constant");
    if (!one_of(c.ubar.kind, {"constant", "distance", "affine", "csv"}))
      fail("step.ubar", "must be constant, distance, affine or csv");
    c.ubar.value = get_number(*t, "step", "value", 1.0);
    c.ubar.slope = get_point(*t, "step", "slope");
    if (c.ubar.kind == "csv") c.ubar.csv = resolve(base, get_string(*t, "step", "csv"));
    c.competitors = get_count(*t, "step", "competitors", 40);
  }
  if (const toml::table* t = table(root, "evolve", false)) {
    only_keys(*t, "evolve", {"times", "samples", "fronts"});
    if (t->get("times")) {
      c.times = get_numbers(*t, "evolve", "times");
      for (std::size_t i = 1; i < c.times.size(); ++i)
        if (!(c.times[i] > c.times[i - 1])) fail("evolve.times", "must increase");
    }
    c.time_samples = get_count(*t, "evolve", "samples", 5);
    if (c.time_samples < 1) fail("evolve.samples", "must be at least 1");
    if (const toml::node* n = t->get("fronts")) {
      const auto v = n->value_exact<bool>();
      if (!v) fail("evolve.fronts", "must be a boolean");
      c.fronts = *v;
    }
  }
  if (const toml::table* t = table(root, "hysteresis", false)) {
    only_keys(*t, "hysteresis", {"per_piece", "snapshots"});
    c.per_piece = get_count(*t, "hysteresis", "per_piece", 64);
    c.snapshots = get_count(*t, "hysteresis", "snapshots", 6);
    if (c.per_piece < 1) fail("hysteresis.per_piece", "must be at least 1");
    if (c.snapshots < 2) fail("hysteresis.snapshots", "must be at least 2");
  }
  if (const toml::table* t = table(root, "gamma", false)) {
    only_keys(*t, "gamma", {"p", "max_iterations"});
    if (t->get("p")) c.p_list = get_numbers(*t, "gamma", "p");
    if (c.p_list.empty()) fail("gamma.p", "must not be empty");
    for (double p : c.p_list)
      if (!(p >= 2.0)) fail("gamma.p", "exponents must be at least 2");
    c.gamma_iterations = get_count(*t, "gamma", "max_iterations", 200);
  }
  if (const toml::table* t = table(root, "output", false)) {
    only_keys(*t, "output", {"dir"});
    c.out_dir = resolve(base, get_string(*t, "output", "dir", "out"));
  } else {
    c.out_dir = base / "out";
  }
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path(), path);
}

inline DomainBoundary build_domain(const OmegaSpec& s) {
  try {
    if (s.preset == "disk") return DomainBoundary::disk(s.radius, s.center, s.samples);
    if (s.preset == "ellipse") return DomainBoundary::ellipse(s.a, s.b, s.center, s.samples);
    if (s.preset == "cassini_oval") return DomainBoundary::cassini_oval(s.a, s.b, s.center, s.samples);
    return DomainBoundary::perturbed_disk(s.radius, s.modes, s.center, s.samples);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidDomain) throw Error(ErrorKind::ConfigError, std::string("omega: ") + e.what());
    throw;
  }
}

}  // namespace beancrit
