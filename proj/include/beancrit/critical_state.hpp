#pragma once
// One quasistatic step: the explicit minimizer
//   u = min(max(ubar, -d^-), d)
// of J(v) = int I_K(Dv) + (v - ubar)^2, the clipping lengths lambda and
// lambda^-, the dual function v, and the residual and minimality checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "beancrit/convex_body.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/minkowski.hpp"
#include "beancrit/parallel.hpp"
#include "beancrit/weak_form.hpp"

namespace beancrit {

/// A scalar field known on the grid, and in closed form when `exact` is set.
/// Ray integrals use the closed form; otherwise the grid is interpolated.
struct SampledField {
  ScalarGrid grid;
  std::function<double(Vec2)> exact;

  double operator()(Vec2 x) const { return exact ? exact(x) : grid.sample(x); }

  static SampledField from_function(const ScalarGrid& layout, std::function<double(Vec2)> fn) {
    SampledField f{layout.like(0.0), fn};
    const GridSpec& g = layout.spec();
    for (std::size_t k = 0; k < g.size(); ++k)
      if (layout.inside(k)) f.grid[k] = fn(g.center(k));
    return f;
  }
  static SampledField from_grid(ScalarGrid grid) { return SampledField{std::move(grid), {}}; }
};

enum class Region : std::int8_t { Minus = -1, Zero = 0, Plus = 1 };

/// Largest amount by which u(a) - u(b) exceeds support(a - b) over
/// neighbouring inside cells (axis and diagonal pairs, both orders).
inline double lipschitz_excess(const ScalarGrid& u, const ConvexBody& body) {
  const GridSpec& g = u.spec();
  const Vec2 steps[4] = {{g.h, 0}, {0, g.h}, {g.h, g.h}, {-g.h, g.h}};
  double bound[4][2];
  for (int s = 0; s < 4; ++s) {
    bound[s][0] = body.support(steps[s]);
    bound[s][1] = body.support(-steps[s]);
  }
  const long di[4] = {1, 0, 1, -1}, dj[4] = {0, 1, 1, 1};
  std::vector<double> row_max(g.ny, -std::numeric_limits<double>::infinity());
  parallel_for(g.ny, [&](std::size_t j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t a = g.index(i, j);
      if (!u.inside(a)) continue;
      for (int s = 0; s < 4; ++s) {
        const long ni = static_cast<long>(i) + di[s], nj = static_cast<long>(j) + dj[s];
        if (ni < 0 || nj < 0 || ni >= static_cast<long>(g.nx) || nj >= static_cast<long>(g.ny)) continue;
        const std::size_t b = g.index(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj));
        if (!u.inside(b)) continue;
        // b - a = steps[s].
        row_max[j] = std::max(row_max[j], u[b] - u[a] - bound[s][0]);
        row_max[j] = std::max(row_max[j], u[a] - u[b] - bound[s][1]);
      }
    }
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

/// Cellwise clamp of ubar between -d^- and d. Throws NotLipschitz when ubar
/// violates the gauge Lipschitz bound by more than `slack`.
inline ScalarGrid explicit_minimizer(const MinkowskiFields& f, const ScalarGrid& ubar, double slack = 1e-4) {
  if (!(ubar.spec() == f.spec())) throw Error(ErrorKind::ShapeMismatch, "ubar grid differs from the distance grid");
  const double excess = lipschitz_excess(ubar, f.body());
  if (excess > slack)
    throw Error(ErrorKind::NotLipschitz, "ubar exceeds the gauge Lipschitz bound by " + std::to_string(excess));
  ScalarGrid u = ubar;
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.inside(k)) u[k] = std::min(std::max(ubar[k], -f.d_minus()[k]), f.d()[k]);
  return u;
}

inline constexpr double kRegionSlack = 1e-10;

inline std::vector<Region> partition(const MinkowskiFields& f, const ScalarGrid& ubar) {
  std::vector<Region> r(ubar.size(), Region::Zero);
  for (std::size_t k = 0; k < ubar.size(); ++k) {
    if (!ubar.inside(k)) continue;
    if (ubar[k] > f.d()[k] + kRegionSlack) r[k] = Region::Plus;
    else if (ubar[k] < -f.d_minus()[k] - kRegionSlack) r[k] = Region::Minus;
  }
  return r;
}

/// sup{s in [0, l) : sign * ubar(y + t p) > t for all t in [0, s)} by a
/// march over `nodes` points and bisection of the first failing interval.
inline double clip_length(const SampledField& ubar, Vec2 y, Vec2 p, double l, double sign,
                          std::size_t nodes = 256, double tol = 1e-6) {
  auto ok = [&](double t) { return sign * ubar(y + t * p) > t; };
  if (!(l > 0.0) || !ok(0.0)) return 0.0;
  const double dt = l / static_cast<double>(nodes);
  for (std::size_t k = 1; k <= nodes; ++k) {
    const double t = std::min(l, dt * static_cast<double>(k));
    if (ok(t)) continue;
    double lo = t - dt, hi = t;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return lo;
  }
  return l;
}

struct ClipLengths {
  std::vector<double> plus;   // lambda per fan sample
  std::vector<double> minus;  // lambda^- per fan sample
};

inline ClipLengths clipping_lengths(const MinkowskiFields& f, const SampledField& ubar) {
  const HalfFan& fp = f.fan().plus;
  const HalfFan& fm = f.fan().minus;
  ClipLengths out{std::vector<double>(fp.size()), std::vector<double>(fm.size())};
  parallel_for(fp.size(), [&](std::size_t i) {
    out.plus[i] = clip_length(ubar, fp.point[i], fp.direction[i], fp.cut[i], 1.0);
    out.minus[i] = clip_length(ubar, fm.point[i], fm.direction[i], fm.cut[i], -1.0);
  });
  return out;
}

/// Trapezoid integral of (sign*ubar(y + t p) - t) (1 - t k)/(1 - t0 k) over
/// [t0, t1], with at least 256 nodes and spacing at most h/2.
inline double ray_potential(const SampledField& ubar, Vec2 y, Vec2 p, double kappa, double t0, double t1,
                            double sign, double h) {
  if (!(t1 > t0)) return 0.0;
  const double den = 1.0 - t0 * kappa;
  if (!(den > 0.0)) return 0.0;
  const auto n = static_cast<std::size_t>(std::max(256.0, std::ceil((t1 - t0) / (0.5 * h))));
  const double dt = (t1 - t0) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = t0 + dt * static_cast<double>(k);
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    acc += w * (sign * ubar(y + t * p) - t) * std::max(0.0, 1.0 - t * kappa);
  }
  return std::max(0.0, acc * dt / den);
}

struct DualField {
  ScalarGrid v;
  std::size_t singular_cells = 0;  // cells of the plus/minus regions set to 0
};

/// The dual function v: for x in the plus region with projection y,
///   v(x) = int_{d(x)}^{lambda(y)} [ubar(y + t p) - t] M_x(t) dt,
/// mirrored on the minus region, 0 elsewhere and at singular cells.
/// lambda is evaluated at the exact projection parameter of each cell.
inline DualField dual_function(const MinkowskiFields& f, const SampledField& ubar,
                               const std::vector<Region>& regions) {
  const GridSpec& g = f.spec();
  DualField out{f.blank(0.0), 0};
  std::vector<std::uint8_t> singular(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t k) {
    if (regions[k] == Region::Zero) return;
    const bool plus = regions[k] == Region::Plus;
    const DistanceGrid& dg = plus ? f.plus() : f.minus();
    if (dg.singular[k]) {
      singular[k] = 1;
      return;
    }
    const HalfFan& fan = plus ? f.fan().plus : f.fan().minus;
    const ConvexBody& body = plus ? f.body() : f.body_minus();
    const double sign = plus ? 1.0 : -1.0;
    const double th = dg.theta[k];
    const Ray r = ray_at(f.domain(), body, th);
    const double l = fan.cut_at(th), kappa = fan.kappa_at(th);
    const double lambda = clip_length(ubar, r.point, r.direction, l, sign);
    out.v[k] = ray_potential(ubar, r.point, r.direction, kappa, dg.value[k], lambda, sign, g.h);
  });
  out.singular_cells = static_cast<std::size_t>(std::count(singular.begin(), singular.end(), 1));
  return out;
}

struct MkReport {
  double residual = 0.0;       // max over the bank, normalized by ||phi||
  double max_rho_deviation = 0.0;  // max |rho(Du) - 1| on {v > 1e-8}, regular cells
  std::size_t checked_cells = 0;
};

/// Weak residual of -div(v D rho(Du)) = ubar - u and the gradient check on
/// {v > 1e-8}. Cells near the cut locus, singular cells and cells whose
/// stencil crosses a region boundary are left out of the gradient check.
inline MkReport mk_residual(const MinkowskiFields& f, const ScalarGrid& u, const ScalarGrid& v,
                            const ScalarGrid& ubar, const std::vector<Region>& regions,
                            const std::vector<Bump>& bank) {
  ScalarGrid rhs = u.like(0.0);
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.inside(k)) rhs[k] = ubar[k] - u[k];
  MkReport rep;
  rep.residual = weak_residual(v, u, rhs, f.body(), bank).max_residual;
  const GridSpec& g = u.spec();
  for (std::size_t j = 1; j + 1 < g.ny; ++j) {
    for (std::size_t i = 1; i + 1 < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!u.inside(k) || !(v[k] > 1e-8) || !u.interior_stencil(i, j)) continue;
      const bool plus = regions[k] == Region::Plus;
      if (plus ? f.near_cut(k) : f.near_cut_minus(k)) continue;
      bool same = true;
      for (std::size_t n : {g.index(i - 1, j), g.index(i + 1, j), g.index(i, j - 1), g.index(i, j + 1)})
        same = same && regions[n] == regions[k];
      if (!same) continue;
      const Vec2 du = u.gradient(i, j);
      const double rho = f.body().gauge(du);
      rep.max_rho_deviation = std::max(rep.max_rho_deviation, std::abs(rho - 1.0));
      ++rep.checked_cells;
    }
  }
  return rep;
}

/// J(v) = int (v - ubar)^2 for feasible v (the indicator term is a gate).
inline double functional_j(const ScalarGrid& v, const ScalarGrid& ubar) {
  std::vector<double> t;
  t.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v.inside(k)) t.push_back((v[k] - ubar[k]) * (v[k] - ubar[k]));
  return pairwise_sum(t) * v.spec().h * v.spec().h;
}

struct MinimalityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double min_relative_margin = std::numeric_limits<double>::infinity();  // (J(w)-J(u)-|u-w|^2)/|u-w|^2
};

/// Feasible competitor: clamp(s (u + psi), -d^-, d), psi a random sum of
/// bumps and s <= 1 chosen so the pairwise Lipschitz bound holds.
inline ScalarGrid random_competitor(const MinkowskiFields& f, const ScalarGrid& u, std::mt19937_64& rng) {
  const GridSpec& g = u.spec();
  const Box& b = f.domain().bbox();
  const double diam = f.domain().diameter();
  std::uniform_real_distribution<double> ux(b.lo.x, b.hi.x), uy(b.lo.y, b.hi.y);
  std::uniform_real_distribution<double> us(0.05 * diam, 0.3 * diam), ua(-0.3, 0.3);
  std::uniform_int_distribution<int> un(1, 4);
  const int nb = un(rng);
  std::vector<std::pair<Bump, double>> bumps;
  for (int i = 0; i < nb; ++i) bumps.push_back({Bump{{ux(rng), uy(rng)}, us(rng)}, ua(rng) * diam});
  ScalarGrid w = u;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!w.inside(k)) continue;
    double psi = 0.0;
    for (const auto& [bump, amp] : bumps) psi += amp * bump.value(g.center(k));
    w[k] = u[k] + psi;
  }
  // Largest pairwise ratio (w(b) - w(a)) / support(b - a) over neighbours.
  double ratio = 0.0;
  const Vec2 steps[4] = {{g.h, 0}, {0, g.h}, {g.h, g.h}, {-g.h, g.h}};
  const long di[4] = {1, 0, 1, -1}, dj[4] = {0, 1, 1, 1};
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t a = g.index(i, j);
      if (!w.inside(a)) continue;
      for (int s = 0; s < 4; ++s) {
        const long ni = static_cast<long>(i) + di[s], nj = static_cast<long>(j) + dj[s];
        if (ni < 0 || nj < 0 || ni >= static_cast<long>(g.nx) || nj >= static_cast<long>(g.ny)) continue;
        const std::size_t c = g.index(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj));
        if (!w.inside(c)) continue;
        ratio = std::max(ratio, (w[c] - w[a]) / f.body().support(steps[s]));
        ratio = std::max(ratio, (w[a] - w[c]) / f.body().support(-steps[s]));
      }
    }
  const double scale = ratio > 1.0 ? 1.0 / ratio : 1.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (w.inside(k)) w[k] = std::min(std::max(scale * w[k], -f.d_minus()[k]), f.d()[k]);
  return w;
}

/// Checks J(w) - J(u) >= |u - w|^2 - tol |u - w|^2 on random feasible
/// competitors. Throws InfeasibleCompetitor if the generator breaks the
/// gauge Lipschitz bound by more than 1e-6.
inline MinimalityReport minimality_check(const MinkowskiFields& f, const ScalarGrid& u, const ScalarGrid& ubar,
                                         std::size_t trials, std::uint64_t seed, double tol = 1e-6) {
  std::mt19937_64 rng(seed);
  MinimalityReport rep;
  const double ju = functional_j(u, ubar);
  for (std::size_t t = 0; t < trials; ++t) {
    const ScalarGrid w = random_competitor(f, u, rng);
    if (lipschitz_excess(w, f.body()) > 1e-6)
      throw Error(ErrorKind::InfeasibleCompetitor, "competitor violates the gauge Lipschitz bound");
    const double gap = l2_difference(u, w);
    const double gap2 = gap * gap;
    if (gap2 == 0.0) {
      ++rep.trials;
      continue;
    }
    const double margin = functional_j(w, ubar) - ju - gap2;
    ++rep.trials;
    rep.min_relative_margin = std::min(rep.min_relative_margin, margin / gap2);
    if (margin < -tol * gap2) ++rep.violations;
  }
  return rep;
}

struct StepOutput {
  ScalarGrid u;
  ScalarGrid v;
  std::vector<Region> regions;
  ClipLengths lambda;
  std::size_t singular_cells = 0;
};

inline StepOutput solve_step(const MinkowskiFields& f, const SampledField& ubar) {
  StepOutput out;
  out.u = explicit_minimizer(f, ubar.grid);
  out.regions = partition(f, ubar.grid);
  out.lambda = clipping_lengths(f, ubar);
  DualField dual = dual_function(f, ubar, out.regions);
  out.v = std::move(dual.v);
  out.singular_cells = dual.singular_cells;
  return out;
}

}  // namespace beancrit
