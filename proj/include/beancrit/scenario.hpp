#pragma once
// Scenario runner behind the command line tool: builds the geometry from a
// config, runs one subcommand, writes CSVs and a manifest.json next to them.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "beancrit/config.hpp"
#include "beancrit/contour.hpp"
#include "beancrit/critical_state.hpp"
#include "beancrit/evolution.hpp"
#include "beancrit/io.hpp"
#include "beancrit/minkowski.hpp"
#include "beancrit/power_law.hpp"

namespace beancrit {

inline constexpr const char* kVersion = "0.1.0";

struct Tolerance {
  const char* name;
  double value;
  const char* use;
};

/// Every numeric tolerance the solvers apply, as recorded in the manifest.
inline std::vector<Tolerance> tolerance_table() {
  return {
      {"gauge.zero_vector", 1e-14, "|xi| below which gauge derivatives raise ZeroVector"},
      {"gauge.bounds_slack", 1e-6, "relative slack on the gauge bounds from boundary samples"},
      {"gauge.fd_gradient_step", 1e-6, "relative step of the finite-difference gradient cross-check"},
      {"gauge.fd_hessian_step", 1e-5, "relative step of the finite-difference Hessian cross-check"},
      {"gauge.knot_closure", 1e-9, "parametric body: knot angles must close to 2 pi within this"},
      {"distance.projection_slack", MinkowskiDistance::kProjectionSlack, "near-minimizers counted as projections"},
      {"distance.cluster_gap", MinkowskiDistance::kClusterGap, "angular gap separating projection clusters"},
      {"distance.equality", 1e-11, "relative tolerance of d(y + t p) = t along a ray"},
      {"fan.cut_tolerance", FanOptions{}.cut_tolerance, "bisection tolerance of l(y), relative to diameter"},
      {"fan.kappa_disagreement", FanOptions{}.kappa_disagreement, "curvature estimates differing more fall back to the Jacobian"},
      {"fan.degenerate_normal", 1e-12, "gauge of the normal below this raises DegenerateNormal"},
      {"fan.change_of_variables", 1e-9, "quadrature tolerance of the ray-coordinate integral"},
      {"critical.lipschitz_slack", 1e-4, "allowed excess of the gauge Lipschitz bound for data"},
      {"critical.region_slack", kRegionSlack, "slack of the Plus/Minus region tests"},
      {"critical.clip_tolerance", 1e-6, "bisection tolerance of lambda"},
      {"critical.dual_support", 1e-8, "v above this counts as support in the residual check"},
      {"critical.competitor_lipschitz", 1e-6, "random competitors must satisfy the gauge bound to this"},
      {"critical.minimality_tolerance", 1e-6, "relative tolerance of J(w) - J(u) >= |u - w|^2"},
      {"drive.contiguity", 1e-12, "gap allowed between consecutive pieces"},
      {"drive.continuity", 1e-9, "relative jump allowed between consecutive pieces"},
      {"drive.monotone", 1e-14, "slope below this counts as flat"},
      {"evolution.ray_end", 1e-10, "bisection tolerance of the active ray segment, relative to diameter"},
      {"evolution.field_support", 1e-12, "E vanishes where w or |Dh| is below this"},
      {"evolution.compass_step", 1e-12, "smallest compass-search step of the saturation sup, relative to diameter"},
      {"evolution.penetration_time", 1e-13, "relative bisection tolerance of tau"},
      {"grid.interpolation_weight", 1e-12, "bilinear weight below which the nearest cell is used"},
      {"weak_form.gradient_floor", 1e-12, "gradient norm below which the flux is zero"},
      {"power_law.gradient_floor", 1e-12, "rho(Dv) below which a triangle is skipped"},
      {"power_law.rel_tolerance", MinimizeOptions{}.rel_tolerance, "relative decrease that ends Newton"},
      {"power_law.armijo", MinimizeOptions{}.armijo, "sufficient decrease constant"},
      {"power_law.shrink", MinimizeOptions{}.shrink, "backtracking factor"},
  };
}

inline ConvexBody build_body(const BodySpec& s) {
  try {
    if (s.shape == "disk") return ConvexBody::disk(s.radius, s.center);
    if (s.shape == "ellipse") return ConvexBody::ellipse(s.a, s.b, s.center);
    return ConvexBody::parametric(load_points_csv(s.csv));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidBody) throw Error(ErrorKind::ConfigError, std::string("K: ") + e.what());
    throw;
  }
}

/// Geometry and fields built once per run.
struct Scenario {
  ScenarioConfig config;
  DomainBoundary omega;
  ConvexBody body;
  MinkowskiFields fields;

  explicit Scenario(ScenarioConfig c)
      : config(std::move(c)),
        omega(build_domain(config.omega)),
        body(build_body(config.body)),
        fields(omega, body, {config.resolution, config.resolution, {}}) {}

  ScalarGrid initial_field() const {
    if (config.initial == "csv") return load_initial_field(config.initial_csv, fields.blank());
    return fields.blank(0.0);
  }

  SampledField ubar() const {
    const UbarSpec& u = config.ubar;
    if (u.kind == "constant") {
      const double c = u.value;
      return SampledField::from_function(fields.blank(), [c](Vec2) { return c; });
    }
    if (u.kind == "affine") {
      const double c = u.value;
      const Vec2 g = u.slope;
      return SampledField::from_function(fields.blank(), [c, g](Vec2 x) { return c + dot(g, x); });
    }
    if (u.kind == "distance") {
      ScalarGrid g = fields.d();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] *= u.value;
      return SampledField::from_grid(std::move(g));
    }
    return SampledField::from_grid(load_initial_field(u.csv, fields.blank()));
  }

  const DriveProfile& drive() const {
    if (!config.drive) throw Error(ErrorKind::ConfigError, "drive: this subcommand needs a [drive] table");
    return *config.drive;
  }
};

struct RunResult {
  std::vector<std::string> files;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
};

namespace scenario_detail {

/// Runs `fn`, prefixing any library error with the module it came from.
template <class F>
auto in_module(const char* module, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string head = std::string(to_string(e.kind())) + ": ";
    if (msg.rfind(head, 0) == 0) msg.erase(0, head.size());
    throw Error(e.kind(), std::string(module) + ": " + msg);
  }
}

inline std::string numbered(const char* stem, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem, k);
  return buf;
}

/// Evenly spaced contour levels strictly inside the range of a field.
inline std::vector<LevelSet> level_sets(const std::string& name, const ScalarGrid& g, std::size_t count) {
  std::vector<LevelSet> out;
  const double lo = g.min_inside(), hi = g.max_inside();
  if (!(hi > lo)) return out;
  for (std::size_t i = 1; i <= count; ++i) {
    const double level = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count + 1);
    out.push_back({name, level, contour_lines(g, level, lo)});
  }
  return out;
}

inline nlohmann::ordered_json config_echo(const ScenarioConfig& c) {
  std::ifstream in(c.source);
  std::stringstream raw;
  raw << in.rdbuf();
  std::stringstream js;
  js << toml::json_formatter{toml::parse(raw.str())};
  return nlohmann::ordered_json::parse(js.str());
}

}  // namespace scenario_detail

inline RunResult run_distance(const Scenario& s, const std::filesystem::path& out) {
  RunResult r;
  const MinkowskiFields& f = s.fields;
  write_fields_csv(out / "distance.csv", {"d", "d_minus"}, {&f.d(), &f.d_minus()});
  write_fan_csv(out / "fan.csv", f.fan());
  r.files = {"distance.csv", "fan.csv"};
  r.results["max_d"] = f.d().max_inside();
  r.results["max_d_minus"] = f.d_minus().max_inside();
  r.results["m0"] = f.fan().plus.m0;
  r.results["m0_minus"] = f.fan().minus.m0;
  r.results["kappa_fallbacks"] = f.fan().plus.kappa_fallbacks + f.fan().minus.kappa_fallbacks;
  return r;
}

inline RunResult run_step(const Scenario& s, const std::filesystem::path& out) {
  using scenario_detail::in_module;
  RunResult r;
  const MinkowskiFields& f = s.fields;
  const SampledField ubar = s.ubar();
  const StepOutput step = in_module("critical_state", [&] { return solve_step(f, ubar); });
  const MkReport mk = in_module("critical_state", [&] {
    return mk_residual(f, step.u, step.v, ubar.grid, step.regions, make_test_bank(f.domain()));
  });
  const MinimalityReport mini = in_module("critical_state", [&] {
    return minimality_check(f, step.u, ubar.grid, s.config.competitors, s.config.seed);
  });
  write_fields_csv(out / "step.csv", {"ubar", "u", "v"}, {&ubar.grid, &step.u, &step.v});
  write_labels_csv(out / "labels.csv", f.blank(), step.regions);
  write_lambda_csv(out / "lambda.csv", f.fan().plus, step.lambda);
  r.files = {"step.csv", "labels.csv", "lambda.csv"};
  r.results["mk_residual"] = mk.residual;
  r.results["max_rho_deviation"] = mk.max_rho_deviation;
  r.results["checked_cells"] = mk.checked_cells;
  r.results["singular_cells"] = step.singular_cells;
  r.results["competitors"] = mini.trials;
  r.results["minimality_violations"] = mini.violations;
  r.results["min_relative_margin"] = mini.min_relative_margin;
  return r;
}

inline RunResult run_evolve(const Scenario& s, const std::filesystem::path& out) {
  using namespace scenario_detail;
  RunResult r;
  const MinkowskiFields& f = s.fields;
  const DriveProfile& drive = s.drive();
  const ScalarGrid h0 = s.initial_field();
  const bool zero_start = h0.max_inside() == 0.0 && h0.min_inside() == 0.0;
  std::vector<double> times = s.config.times;
  if (times.empty()) {
    const std::size_t n = s.config.time_samples;
    for (std::size_t k = 0; k < n; ++k)
      times.push_back(n == 1 ? drive.t_end()
                             : drive.t_begin() + (drive.t_end() - drive.t_begin()) * static_cast<double>(k) /
                                                     static_cast<double>(n - 1));
  }
  for (double t : times)
    if (t < drive.t_begin() || t > drive.t_end())
      throw Error(ErrorKind::ConfigError, "evolve.times: " + fmt(t) + " lies outside the drive");

  const auto bank = make_test_bank(f.domain());
  const SampledField h0s = SampledField::from_grid(h0);
  auto penetration = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < drive.pieces().size(); ++i) {
    const auto tau = in_module("evolution", [&] { return full_penetration_time(f, h0s, drive, i); });
    penetration.push_back(tau ? nlohmann::ordered_json(*tau) : nlohmann::ordered_json(nullptr));
  }
  r.results["full_penetration_time"] = penetration;

  auto samples = nlohmann::ordered_json::array();
  CsvWriter index(out / "times.csv", {"k", "t", "Hs", "state", "front", "levels"});
  r.files.push_back("times.csv");
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const EvolutionState st = in_module("evolution", [&] { return evolve_state(f, h0, drive, t); });
    const std::size_t piece = drive.piece_index(t);
    const int dir = drive.direction(piece);
    const ScalarGrid start = piece_start_state(f, h0, drive, piece);
    const ScalarGrid rate = field_rate(f, start, dir, drive.value(t), drive.derivative(t));
    const WeakResidual far = faraday_residual(st.h, st.w, rate, f.body(), bank);

    const std::string state_file = numbered("state", k);
    write_fields_csv(out / state_file, {"h", "w", "Ex", "Ey"}, {&st.h, &st.w, &st.E.x, &st.E.y});
    r.files.push_back(state_file);

    std::vector<LevelSet> sets = level_sets("h", st.h, 8);
    for (auto& l : level_sets("w", st.w, 8)) sets.push_back(std::move(l));
    const std::string levels_file = numbered("levels", k);
    write_levels_csv(out / levels_file, sets);
    r.files.push_back(levels_file);

    std::string front_file = "";
    if (s.config.fronts && zero_start && piece == 0 && dir > 0) {
      try {
        const auto lines = penetration_front(f, drive, t);
        front_file = numbered("front", k);
        write_front_csv(out / front_file, lines);
        r.files.push_back(front_file);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyFront) throw;
      }
    }
    index.row({fmt(k), fmt(t), fmt(drive.value(t)), state_file, front_file, levels_file});
    nlohmann::ordered_json row;
    row["t"] = t;
    row["Hs"] = drive.value(t);
    row["max_w"] = st.w.max_inside();
    row["faraday_residual"] = far.max_residual;
    samples.push_back(row);
  }
  r.results["samples"] = samples;
  return r;
}

inline RunResult run_hysteresis(const Scenario& s, const std::filesystem::path& out) {
  using namespace scenario_detail;
  RunResult r;
  const MinkowskiFields& f = s.fields;
  const DriveProfile& drive = s.drive();
  const ScalarGrid h0 = s.initial_field();
  const LoopResult loop = in_module("evolution", [&] {
    return hysteresis_loop(f, h0, drive, s.config.per_piece, s.config.snapshots);
  });
  write_loop_csv(out / "loop.csv", loop.loop);
  r.files.push_back("loop.csv");
  auto snaps = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < loop.snapshots.size(); ++k) {
    const EvolutionState& st = loop.snapshots[k];
    const std::string file = numbered("snapshot", k);
    write_fields_csv(out / file, {"h", "w", "Ex", "Ey"}, {&st.h, &st.w, &st.E.x, &st.E.y});
    r.files.push_back(file);
    snaps.push_back({{"t", st.t}, {"Hs", drive.value(st.t)}, {"file", file}});
  }
  write_grid_csv(out / "terminal.csv", loop.terminal);
  r.files.push_back("terminal.csv");
  r.results["snapshots"] = snaps;
  r.results["terminal_max"] = loop.terminal.max_inside();
  r.results["terminal_min"] = loop.terminal.min_inside();
  r.results["terminal_magnetization"] = loop.loop.back().M;
  return r;
}

inline RunResult run_gamma(const Scenario& s, const std::filesystem::path& out) {
  using namespace scenario_detail;
  RunResult r;
  const MinkowskiFields& f = s.fields;
  const SampledField ubar = s.ubar();
  MinimizeOptions opts;
  opts.max_iterations = s.config.gamma_iterations;
  std::vector<ScalarGrid> minimizers;
  const auto rows = in_module("power_law", [&] {
    return gamma_convergence_report(f, ubar.grid, s.config.p_list, opts, &minimizers);
  });
  CsvWriter w(out / "gamma.csv", {"p", "gap_l2", "jp", "j", "iterations", "max_rho_du", "converged", "liminf_ok"});
  auto table = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    w.row({fmt(row.p), fmt(row.gap_l2), fmt(row.jp), fmt(row.j), fmt(row.iterations), fmt(row.max_rho_du),
           row.converged ? "1" : "0", row.liminf_ok ? "1" : "0"});
    table.push_back({{"p", row.p}, {"gap_l2", row.gap_l2}, {"converged", row.converged}, {"liminf_ok", row.liminf_ok}});
  }
  r.files.push_back("gamma.csv");
  const ScalarGrid u = explicit_minimizer(f, ubar.grid);
  std::vector<std::string> names{"u"};
  std::vector<const ScalarGrid*> grids{&u};
  for (std::size_t i = 0; i < minimizers.size(); ++i) {
    names.push_back("u_p" + fmt(s.config.p_list[i]));
    grids.push_back(&minimizers[i]);
  }
  write_fields_csv(out / "gamma_fields.csv", names, grids);
  r.files.push_back("gamma_fields.csv");
  r.results["rows"] = table;
  return r;
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"distance", "step", "evolve", "hysteresis", "gamma"};
  return names;
}

/// Runs one subcommand and writes its manifest. The output directory is
/// created if needed.
inline RunResult run_scenario(const ScenarioConfig& config, const std::string& subcommand) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw Error(ErrorKind::ConfigError, "unknown subcommand '" + subcommand + "'");
  if ((subcommand == "evolve" || subcommand == "hysteresis") && !config.drive)
    throw Error(ErrorKind::ConfigError, "drive: '" + subcommand + "' needs a [drive] table");
  const std::filesystem::path out = config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::ConfigError, "output.dir: cannot create " + out.string());
  const Scenario s(config);
  RunResult r;
  if (subcommand == "distance") r = run_distance(s, out);
  else if (subcommand == "step") r = run_step(s, out);
  else if (subcommand == "evolve") r = run_evolve(s, out);
  else if (subcommand == "hysteresis") r = run_hysteresis(s, out);
  else r = run_gamma(s, out);

  nlohmann::ordered_json m;
  m["tool"] = "beancrit";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["seed"] = config.seed;
  m["resolution"] = config.resolution;
  m["config"] = config.source.empty() ? nlohmann::ordered_json(nullptr) : scenario_detail::config_echo(config);
  auto tol = nlohmann::ordered_json::object();
  for (const auto& t : tolerance_table()) tol[t.name] = {{"value", t.value}, {"use", t.use}};
  m["tolerances"] = tol;
  m["outputs"] = r.files;
  m["results"] = r.results;
  std::ofstream(out / "manifest.json") << m.dump(2) << '\n';
  return r;
}

}  // namespace beancrit
