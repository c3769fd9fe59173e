#pragma once
// Quasistatic evolution of the internal field h under a piecewise monotone
// external field H_s(t): discrete steps, closed-form limits, dissipated
// power w, electric field E = w D rho(Dh), saturation time, fronts, loops.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "beancrit/contour.hpp"
#include "beancrit/critical_state.hpp"
#include "beancrit/drive.hpp"
#include "beancrit/minkowski.hpp"
#include "beancrit/weak_form.hpp"

namespace beancrit {

struct VectorGrid {
  ScalarGrid x, y;
};

struct EvolutionState {
  double t = 0.0;
  ScalarGrid h;
  ScalarGrid w;
  VectorGrid E;
};

/// h_next = min(max(h_prev, c - d^-), c + d), computed as the explicit
/// minimizer for ubar = h_prev - c shifted back by c.
inline ScalarGrid discrete_step(const MinkowskiFields& f, const ScalarGrid& h_prev, double c_next) {
  ScalarGrid ubar = h_prev;
  for (std::size_t k = 0; k < ubar.size(); ++k)
    if (ubar.inside(k)) ubar[k] -= c_next;
  ScalarGrid u = explicit_minimizer(f, ubar);
  for (std::size_t k = 0; k < u.size(); ++k)
    if (u.inside(k)) u[k] += c_next;
  return u;
}

/// Discrete states h^n_i on the uniform partition t_i = t_begin + i dt,
/// i = 0..n, with c_i = H_s(t_i).
inline std::vector<ScalarGrid> discrete_evolution(const MinkowskiFields& f, const ScalarGrid& h0,
                                                  const DriveProfile& drive, std::size_t n) {
  std::vector<ScalarGrid> states{h0};
  const double dt = (drive.t_end() - drive.t_begin()) / static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i)
    states.push_back(discrete_step(f, states.back(), drive.value(drive.t_begin() + dt * static_cast<double>(i))));
  return states;
}

/// Closed form for one monotone piece starting from `state`.
inline ScalarGrid advance_piece(const MinkowskiFields& f, const ScalarGrid& state, int direction, double H) {
  ScalarGrid h = state;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!h.inside(k)) continue;
    if (direction > 0) h[k] = std::max(state[k], H - f.d_minus()[k]);
    else if (direction < 0) h[k] = std::min(state[k], H + f.d()[k]);
  }
  return h;
}

/// State at the start of the piece containing t (pieces before it are
/// composed in order).
inline ScalarGrid piece_start_state(const MinkowskiFields& f, const ScalarGrid& h0, const DriveProfile& drive,
                                    std::size_t piece) {
  ScalarGrid state = h0;
  for (std::size_t i = 0; i < piece; ++i)
    state = advance_piece(f, state, drive.direction(i), drive.pieces()[i].value(drive.pieces()[i].t1));
  return state;
}

/// h(., t): max(h0, H_s(t) - d^-) on nondecreasing pieces, min(h0, H_s(t) + d)
/// on nonincreasing ones, handing the state over at junctions.
inline ScalarGrid closed_form_field(const MinkowskiFields& f, const ScalarGrid& h0, const DriveProfile& drive,
                                    double t) {
  if (t <= drive.t_begin()) return h0;
  const std::size_t piece = drive.piece_index(t);
  const ScalarGrid start = piece_start_state(f, h0, drive, piece);
  return advance_piece(f, start, drive.direction(piece), drive.value(t));
}

/// Pointwise closed form at x, with exact distance queries instead of the
/// grid.
inline double closed_form_at(const MinkowskiFields& f, const std::function<double(Vec2)>& h0,
                             const DriveProfile& drive, double t, Vec2 x) {
  double h = h0(x);
  if (t <= drive.t_begin()) return h;
  const std::size_t piece = drive.piece_index(t);
  const double dm = f.distance_minus()(x), dp = f.distance()(x);
  for (std::size_t i = 0; i <= piece; ++i) {
    const double H = i == piece ? drive.value(t) : drive.pieces()[i].value(drive.pieces()[i].t1);
    const int dir = drive.direction(i);
    if (dir > 0) h = std::max(h, H - dm);
    else if (dir < 0) h = std::min(h, H + dp);
  }
  return h;
}

namespace detail {

/// sup{s in [a, b] : g(s) <= level} for g nondecreasing, by a march over
/// `nodes` points and bisection. Returns a value < a when g(a) > level.
inline double last_below(const std::function<double(double)>& g, double a, double b, double level,
                         std::size_t nodes, double tol) {
  if (g(a) > level) return a - 1.0;
  const double ds = (b - a) / static_cast<double>(nodes);
  for (std::size_t k = 1; k <= nodes; ++k) {
    const double s = k == nodes ? b : a + ds * static_cast<double>(k);
    if (g(s) <= level) continue;
    double lo = s - ds, hi = s;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) <= level ? lo : hi) = mid;
    }
    return lo;
  }
  return b;
}

}  // namespace detail

/// Dissipated power at time t. On a nondecreasing piece, with y the
/// projection of x for -K and h_s the state at the piece start,
///   w(x) = H_s'(t) int_{d^-(x)}^{l^-(y)} 1{h_s(y + s p^-) <= H_s(t) - s} M^-_x(s) ds,
/// mirrored with d, l, M on nonincreasing pieces. The indicator holds on an
/// initial segment of the ray; its end is located by bisection and the
/// linear Jacobian factor is integrated exactly. Singular cells get 0.
inline ScalarGrid dissipation_field(const MinkowskiFields& f, const SampledField& h_start, int direction,
                                    double H, double dH) {
  ScalarGrid w = f.blank(0.0);
  if (direction == 0 || dH == 0.0) return w;
  const double sigma = direction > 0 ? 1.0 : -1.0;
  const DistanceGrid& dg = direction > 0 ? f.minus() : f.plus();
  const HalfFan& fan = direction > 0 ? f.fan().minus : f.fan().plus;
  const ConvexBody& body = direction > 0 ? f.body_minus() : f.body();
  const double tol = 1e-10 * f.domain().diameter();
  const GridSpec& g = f.spec();
  parallel_for(g.size(), [&](std::size_t k) {
    if (!w.inside(k) || dg.singular[k]) return;
    const double th = dg.theta[k];
    const double d = dg.value[k];
    const Ray r = ray_at(f.domain(), body, th);
    const double l = fan.cut_at(th), kappa = fan.kappa_at(th);
    if (!(l > d)) return;
    auto gfun = [&](double s) { return sigma * h_start(r.point + s * r.direction) + s; };
    const double s_end = detail::last_below(gfun, d, l, sigma * H, 64, tol);
    if (s_end <= d) return;
    const double den = 1.0 - d * kappa;
    if (!(den > 0.0)) return;
    auto F = [&](double s) { return s - 0.5 * kappa * s * s; };
    w[k] = sigma * dH * (F(s_end) - F(d)) / den;
  });
  return w;
}

inline ScalarGrid dissipation_field(const MinkowskiFields& f, const ScalarGrid& h0, const DriveProfile& drive,
                                    double t, const SampledField* h0_exact = nullptr) {
  const std::size_t piece = drive.piece_index(t);
  const int dir = drive.direction(piece);
  if (piece == 0 && h0_exact) return dissipation_field(f, *h0_exact, dir, drive.value(t), drive.derivative(t));
  const SampledField start = SampledField::from_grid(piece_start_state(f, h0, drive, piece));
  return dissipation_field(f, start, dir, drive.value(t), drive.derivative(t));
}

/// v / dt for the discrete step h_prev -> c_next: the per-step dual function
/// scaled by the time step.
inline ScalarGrid discrete_dissipation(const MinkowskiFields& f, const ScalarGrid& h_prev, double c_next, double dt) {
  ScalarGrid ubar = h_prev;
  for (std::size_t k = 0; k < ubar.size(); ++k)
    if (ubar.inside(k)) ubar[k] -= c_next;
  const DualField dual = dual_function(f, SampledField::from_grid(ubar), partition(f, ubar));
  ScalarGrid w = dual.v;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] /= dt;
  return w;
}

/// E = w D rho(Dh) where w > 1e-12 and Dh != 0; zero elsewhere.
inline VectorGrid electric_field(const ScalarGrid& h, const ScalarGrid& w, const ConvexBody& body) {
  VectorGrid E{h.like(0.0), h.like(0.0)};
  const GridSpec& g = h.spec();
  parallel_for(g.ny, [&](std::size_t j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!h.inside(k) || !(w[k] > 1e-12)) continue;
      const Vec2 dh = h.gradient(i, j);
      if (norm(dh) < 1e-12) continue;
      const Vec2 e = w[k] * body.grad_gauge(dh);
      E.x[k] = e.x;
      E.y[k] = e.y;
    }
  });
  return E;
}

/// dh/dt of the closed form: H_s'(t) on the cells the front has swept
/// ({h_s <= H - d^-} rising, {h_s >= H + d} falling), 0 elsewhere.
inline ScalarGrid field_rate(const MinkowskiFields& f, const ScalarGrid& h_start, int direction, double H, double dH) {
  ScalarGrid r = f.blank(0.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!r.inside(k)) continue;
    const bool active = direction > 0 ? h_start[k] <= H - f.d_minus()[k]
                                      : (direction < 0 && h_start[k] >= H + f.d()[k]);
    r[k] = active ? dH : 0.0;
  }
  return r;
}

/// Weak residual of -div(w D rho(Dh)) = -dh/dt.
inline WeakResidual faraday_residual(const ScalarGrid& h, const ScalarGrid& w, const ScalarGrid& dh_dt,
                                     const ConvexBody& body, const std::vector<Bump>& bank) {
  ScalarGrid rhs = dh_dt;
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -rhs[k];
  return weak_residual(w, h, rhs, body, bank);
}

/// Full state at time t (h and its rate from the closed form, w, E).
inline EvolutionState evolve_state(const MinkowskiFields& f, const ScalarGrid& h0, const DriveProfile& drive,
                                   double t, const SampledField* h0_exact = nullptr) {
  const std::size_t piece = drive.piece_index(t);
  const int dir = drive.direction(piece);
  const ScalarGrid start = piece_start_state(f, h0, drive, piece);
  EvolutionState s;
  s.t = t;
  s.h = t <= drive.t_begin() ? h0 : advance_piece(f, start, dir, drive.value(t));
  if (piece == 0 && h0_exact) s.w = dissipation_field(f, *h0_exact, dir, drive.value(t), drive.derivative(t));
  else s.w = dissipation_field(f, SampledField::from_grid(start), dir, drive.value(t), drive.derivative(t));
  s.E = electric_field(s.h, s.w, f.body());
  return s;
}

namespace detail {

/// sup over Omega of phi(x): grid maximum refined by compass search from the
/// best few cells.
inline double sup_over_domain(const MinkowskiFields& f, const ScalarGrid& on_grid,
                              const std::function<double(Vec2)>& phi) {
  const GridSpec& g = f.spec();
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (on_grid.inside(k)) cells.push_back(k);
  const std::size_t top = std::min<std::size_t>(8, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<long>(top), cells.end(),
                    [&](std::size_t a, std::size_t b) { return on_grid[a] > on_grid[b]; });
  double best = -std::numeric_limits<double>::infinity();
  const Vec2 dirs[8] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  for (std::size_t c = 0; c < top; ++c) {
    Vec2 x = g.center(cells[c]);
    double fx = phi(x);
    for (double step = g.h; step > 1e-12 * f.domain().diameter(); step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (const Vec2& d : dirs) {
          const Vec2 y = x + step * d;
          if (!f.domain().contains(y)) continue;
          const double fy = phi(y);
          if (fy > fx) {
            x = y;
            fx = fy;
            moved = true;
          }
        }
      }
    }
    best = std::max(best, fx);
  }
  return best;
}

}  // namespace detail

/// Smallest time in the given piece at which the front reaches every point:
/// H_s(tau) = sup(h_s + d^-) rising, H_s(tau) = inf(h_s - d) falling.
/// Returns nullopt when the piece never gets there.
inline std::optional<double> full_penetration_time(const MinkowskiFields& f, const SampledField& h0,
                                                   const DriveProfile& drive, std::size_t piece = 0) {
  const int dir = drive.direction(piece);
  if (dir == 0) return std::nullopt;
  const double sigma = dir > 0 ? 1.0 : -1.0;
  const MinkowskiDistance& dist = dir > 0 ? f.distance_minus() : f.distance();
  const ScalarGrid& dgrid = dir > 0 ? f.d_minus() : f.d();
  const SampledField start =
      piece == 0 ? h0 : SampledField::from_grid(piece_start_state(f, h0.grid, drive, piece));
  ScalarGrid on_grid = dgrid;
  for (std::size_t k = 0; k < on_grid.size(); ++k)
    if (on_grid.inside(k)) on_grid[k] += sigma * start.grid[k];
  const double target =
      detail::sup_over_domain(f, on_grid, [&](Vec2 x) { return sigma * start(x) + dist(x); });
  const DrivePiece& p = drive.pieces()[piece];
  auto gap = [&](double t) { return sigma * p.value(t) - target; };
  if (gap(p.t0) >= 0.0) return p.t0;
  if (gap(p.t1) < 0.0) return std::nullopt;
  double lo = p.t0, hi = p.t1;
  const double tol = 1e-13 * std::max(1.0, std::abs(p.t1));
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

/// Level set {d^- = H_s(t)} for h0 = 0 on a rising drive. H_s(t) = 0 gives
/// the boundary itself; a negative level or one past saturation throws
/// EmptyFront.
inline std::vector<Polyline> penetration_front(const MinkowskiFields& f, const DriveProfile& drive, double t) {
  const double level = drive.value(t);
  if (level < 0.0) throw Error(ErrorKind::EmptyFront, "external field is negative");
  if (level == 0.0) {
    Polyline boundary;
    for (const auto& s : f.domain().samples()) boundary.push_back(s.point);
    boundary.push_back(boundary.front());
    return {boundary};
  }
  const double saturation = detail::sup_over_domain(f, f.d_minus(), [&](Vec2 x) { return f.distance_minus()(x); });
  if (level >= saturation) throw Error(ErrorKind::EmptyFront, "field is past full penetration");
  auto lines = contour_lines(f.d_minus(), level, 0.0);
  if (lines.empty()) throw Error(ErrorKind::EmptyFront, "no contour at this level");
  return lines;
}

struct LoopSample {
  double t = 0.0, H = 0.0, M = 0.0;
};

struct LoopResult {
  std::vector<LoopSample> loop;
  std::vector<EvolutionState> snapshots;
  ScalarGrid terminal;
};

/// Mean over the inside cells of h - H.
inline double magnetization(const ScalarGrid& h, double H) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h.inside(k)) terms.push_back(h[k] - H);
  return terms.empty() ? 0.0 : pairwise_sum(terms) / static_cast<double>(terms.size());
}

/// Samples (t, H_s, M) along the whole drive, `per_piece` intervals per
/// piece, and `snapshot_count` full states evenly spaced in time.
inline LoopResult hysteresis_loop(const MinkowskiFields& f, const ScalarGrid& h0, const DriveProfile& drive,
                                  std::size_t per_piece = 64, std::size_t snapshot_count = 6) {
  LoopResult out;
  ScalarGrid start = h0;
  const auto& pieces = drive.pieces();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const int dir = drive.direction(i);
    for (std::size_t k = (i == 0 ? 0 : 1); k <= per_piece; ++k) {
      const double t = pieces[i].t0 + (pieces[i].t1 - pieces[i].t0) * static_cast<double>(k) / static_cast<double>(per_piece);
      const double H = pieces[i].value(t);
      out.loop.push_back({t, H, magnetization(advance_piece(f, start, dir, H), H)});
    }
    start = advance_piece(f, start, dir, pieces[i].value(pieces[i].t1));
  }
  out.terminal = start;
  for (std::size_t s = 0; s < snapshot_count; ++s) {
    const double t = snapshot_count == 1 ? drive.t_end()
                                         : drive.t_begin() + (drive.t_end() - drive.t_begin()) * static_cast<double>(s) /
                                                                 static_cast<double>(snapshot_count - 1);
    out.snapshots.push_back(evolve_state(f, h0, drive, t));
  }
  return out;
}

}  // namespace beancrit
