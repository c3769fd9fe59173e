#pragma once
// Independent oracle: minimizers of the power-law functionals
//   J_p(v) = int (1/p) rho(Dv)^p + (v - ubar)^2,   v = 0 outside Omega,
// for growing p, compared with the explicit minimizer of the limit problem.
//
// Dv is the P1 gradient on the criss triangulation of the cell centres
// (two triangles per square, outside cells pinned at 0). The discrete
// functional is minimized by damped Newton steps with Armijo backtracking.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "beancrit/convex_body.hpp"
#include "beancrit/critical_state.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/parallel.hpp"

namespace beancrit {

struct PowerLawProblem {
  double p = 2.0;
  ScalarGrid ubar;
  const ConvexBody* body = nullptr;
};

namespace detail {

/// Triangle of three cells with gradient sign * (v[b] - v[a], v[c] - v[a]) / h.
/// Lower triangles use the forward neighbours, upper ones the backward.
struct Triangle {
  std::size_t a, b, c;  // grid indices: origin, x-neighbour, y-neighbour
  double sign;          // +1 lower triangle, -1 upper
};

inline std::vector<Triangle> triangles(const ScalarGrid& layout) {
  const GridSpec& g = layout.spec();
  std::vector<Triangle> tris;
  for (std::size_t j = 0; j + 1 < g.ny; ++j) {
    for (std::size_t i = 0; i + 1 < g.nx; ++i) {
      const std::size_t a = g.index(i, j), b = g.index(i + 1, j), c = g.index(i, j + 1), e = g.index(i + 1, j + 1);
      if (layout.inside(a) || layout.inside(b) || layout.inside(c)) tris.push_back({a, b, c, 1.0});
      // Upper triangle: origin e, x-neighbour c (backward), y-neighbour b (backward).
      if (layout.inside(e) || layout.inside(b) || layout.inside(c)) tris.push_back({e, c, b, -1.0});
    }
  }
  return tris;
}

inline Vec2 tri_gradient(const Triangle& t, const ScalarGrid& v, double h) {
  auto val = [&](std::size_t k) { return v.inside(k) ? v[k] : 0.0; };
  const double va = val(t.a);
  return {t.sign * (val(t.b) - va) / h, t.sign * (val(t.c) - va) / h};
}

}  // namespace detail

/// Throws BoundaryViolation when v is nonzero on a cell outside Omega.
inline void check_boundary(const ScalarGrid& v) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!v.inside(k) && v[k] != 0.0) throw Error(ErrorKind::BoundaryViolation, "v is nonzero outside the domain");
}

/// Discrete J_p. Returns +infinity only when the value is NaN.
inline double evaluate_jp(const PowerLawProblem& prob, const ScalarGrid& v) {
  check_boundary(v);
  const GridSpec& g = v.spec();
  const auto tris = detail::triangles(v);
  const double tri_area = 0.5 * g.h * g.h;
  std::vector<double> terms(tris.size());
  parallel_for(tris.size(), [&](std::size_t t) {
    const double r = prob.body->gauge(detail::tri_gradient(tris[t], v, g.h));
    terms[t] = tri_area * std::pow(r, prob.p) / prob.p;
  });
  std::vector<double> mass;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v.inside(k)) mass.push_back((v[k] - prob.ubar[k]) * (v[k] - prob.ubar[k]));
  const double val = pairwise_sum(terms) + pairwise_sum(mass) * g.h * g.h;
  return std::isnan(val) ? std::numeric_limits<double>::infinity() : val;
}

/// Gradient of the discrete J_p with respect to the inside values (zero on
/// outside cells). Triangles with rho(Dv) < 1e-12 contribute nothing.
inline ScalarGrid gradient_jp(const PowerLawProblem& prob, const ScalarGrid& v) {
  const GridSpec& g = v.spec();
  const auto tris = detail::triangles(v);
  const double tri_area = 0.5 * g.h * g.h;
  std::vector<Vec2> flux(tris.size());
  parallel_for(tris.size(), [&](std::size_t t) {
    const Vec2 dv = detail::tri_gradient(tris[t], v, g.h);
    const double r = prob.body->gauge(dv);
    if (r < 1e-12) return;
    flux[t] = tri_area * std::pow(r, prob.p - 1.0) * prob.body->grad_gauge(dv);
  });
  // Scatter in a fixed order for reproducibility.
  ScalarGrid grad = v.like(0.0);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& tr = tris[t];
    const Vec2 q = tr.sign * flux[t] / g.h;
    grad[tr.b] += q.x;
    grad[tr.c] += q.y;
    grad[tr.a] -= q.x + q.y;
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v.inside(k)) grad[k] += 2.0 * g.h * g.h * (v[k] - prob.ubar[k]);
    else grad[k] = 0.0;
  }
  return grad;
}

struct MinimizeOptions {
  std::size_t max_iterations = 200;
  double rel_tolerance = 1e-12;  // stop when a step lowers J by less than this, relatively
  double armijo = 1e-4;
  double shrink = 0.5;
};

struct MinimizeResult {
  ScalarGrid v;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool monotone = true;  // every accepted step lowered J
};

/// Damped Newton on the discrete J_p from `start`.
inline MinimizeResult minimize_jp(const PowerLawProblem& prob, const ScalarGrid& start, MinimizeOptions opts = {}) {
  using SpMat = Eigen::SparseMatrix<double>;
  const GridSpec& g = start.spec();
  std::vector<long> id(g.size(), -1);
  long n = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (start.inside(k)) id[k] = n++;
  const auto tris = detail::triangles(start);
  const double tri_area = 0.5 * g.h * g.h;

  MinimizeResult res{start, evaluate_jp(prob, start), 0, false, true};
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Eigen::SimplicialLDLT<SpMat> solver;
  bool analyzed = false;
  for (; res.iterations < opts.max_iterations; ++res.iterations) {
    const ScalarGrid grad = gradient_jp(prob, res.v);
    // Hessian: per triangle B^T H_T B with H_T = area rho^(p-2) [(p-1) Drho Drho^T + rho D^2 rho].
    std::vector<Mat2> hloc(tris.size(), Mat2{0, 0, 0, 0});
    parallel_for(tris.size(), [&](std::size_t t) {
      const Vec2 dv = detail::tri_gradient(tris[t], res.v, g.h);
      const double r = prob.body->gauge(dv);
      if (r < 1e-12) return;
      const Vec2 dr = prob.body->grad_gauge(dv);
      const Mat2 d2 = prob.body->hess_gauge(dv);
      const double s = tri_area * std::pow(r, prob.p - 2.0);
      hloc[t] = Mat2{s * ((prob.p - 1.0) * dr.x * dr.x + r * d2.a11), s * ((prob.p - 1.0) * dr.x * dr.y + r * d2.a12),
                     s * ((prob.p - 1.0) * dr.y * dr.x + r * d2.a21), s * ((prob.p - 1.0) * dr.y * dr.y + r * d2.a22)};
    });
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * tris.size() + static_cast<std::size_t>(n));
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& tr = tris[t];
      const std::size_t nodes[3] = {tr.a, tr.b, tr.c};
      // d(grad)/d(node values) / h; the sign squares away.
      const double bx[3] = {-1.0 / g.h, 1.0 / g.h, 0.0}, by[3] = {-1.0 / g.h, 0.0, 1.0 / g.h};
      const Mat2& H = hloc[t];
      for (int r = 0; r < 3; ++r) {
        if (id[nodes[r]] < 0) continue;
        for (int c = 0; c < 3; ++c) {
          if (id[nodes[c]] < 0) continue;
          const double val = bx[r] * (H.a11 * bx[c] + H.a12 * by[c]) + by[r] * (H.a21 * bx[c] + H.a22 * by[c]);
          trip.emplace_back(id[nodes[r]], id[nodes[c]], val);  // zeros kept: fixed pattern
        }
      }
    }
    for (std::size_t k = 0; k < g.size(); ++k)
      if (id[k] >= 0) trip.emplace_back(id[k], id[k], 2.0 * g.h * g.h);
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed) {
      solver.analyzePattern(A);
      analyzed = true;
    }
    solver.factorize(A);
    Eigen::VectorXd b(n);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (id[k] >= 0) b[id[k]] = -grad[k];
    Eigen::VectorXd step = solver.info() == Eigen::Success ? Eigen::VectorXd(solver.solve(b)) : b;
    double slope = -step.dot(b);
    if (!(slope < 0.0)) {
      step = b;  // fall back to steepest descent
      slope = -b.squaredNorm();
    }
    if (slope == 0.0) {
      res.converged = true;
      break;
    }
    double alpha = 1.0;
    ScalarGrid trial = res.v;
    double jt = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < g.size(); ++k)
        if (id[k] >= 0) trial[k] = res.v[k] + alpha * step[id[k]];
      jt = evaluate_jp(prob, trial);
      if (jt <= res.objective + opts.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opts.shrink;
    }
    if (!accepted) {
      res.converged = true;  // no representable decrease left
      break;
    }
    const double drop = res.objective - jt;
    res.monotone = res.monotone && jt <= res.objective;
    res.v = trial;
    res.objective = jt;
    if (drop <= opts.rel_tolerance * std::max(1.0, std::abs(jt))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  return res;
}

/// max over triangles of rho(Dv).
inline double max_rho_gradient(const ScalarGrid& v, const ConvexBody& body) {
  double m = 0.0;
  for (const auto& t : detail::triangles(v)) m = std::max(m, body.gauge(detail::tri_gradient(t, v, v.spec().h)));
  return m;
}

struct GammaRow {
  double p = 0.0;
  double gap_l2 = 0.0;  // |u_p - u|_2 / |u|_2 (absolute when u = 0)
  double jp = 0.0;      // J_p(u_p)
  double j = 0.0;       // J(u) of the explicit minimizer
  std::size_t iterations = 0;
  double max_rho_du = 0.0;
  bool converged = false;
  bool liminf_ok = true;  // J(u) <= J_p(u_p) + |u - u_p|_2
};

/// Minimizes J_p along the exponent ladder, warm-starting each exponent from
/// the previous minimizer; the first start is 0.99 times the explicit one.
inline std::vector<GammaRow> gamma_convergence_report(const MinkowskiFields& f, const ScalarGrid& ubar,
                                                      const std::vector<double>& p_list = {4, 8, 16, 32, 64},
                                                      MinimizeOptions opts = {},
                                                      std::vector<ScalarGrid>* minimizers = nullptr) {
  const ScalarGrid u = explicit_minimizer(f, ubar);
  const double ju = functional_j(u, ubar);
  const double unorm = l2_norm(u);
  ScalarGrid current = u;
  for (std::size_t k = 0; k < current.size(); ++k) current[k] = current.inside(k) ? 0.99 * u[k] : 0.0;
  std::vector<GammaRow> rows;
  for (double p : p_list) {
    if (p < 2.0) throw Error(ErrorKind::ConfigError, "power-law exponent must be at least 2");
    const PowerLawProblem prob{p, ubar, &f.body()};
    const MinimizeResult r = minimize_jp(prob, current, opts);
    current = r.v;
    GammaRow row;
    row.p = p;
    const double gap = l2_difference(r.v, u);
    row.gap_l2 = unorm > 0.0 ? gap / unorm : gap;
    row.jp = r.objective;
    row.j = ju;
    row.iterations = r.iterations;
    row.max_rho_du = max_rho_gradient(r.v, f.body());
    row.converged = r.converged;
    row.liminf_ok = ju <= r.objective + gap;
    rows.push_back(row);
    if (minimizers) minimizers->push_back(r.v);
  }
  return rows;
}

}  // namespace beancrit
