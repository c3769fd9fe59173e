#pragma once
// Minkowski distance from the boundary, projections, normal rays and cut
// distances.
//
// For a body B (either K or -K) the distance is
//   d_B(x) = min_{y on boundary} support_B(x - y),
// so d = d_K and d^- = d_{-K}. Rays leave y along p(y) = D gauge_B(nu(y)),
// nu the inward Euclidean normal, and stay minimizing up to the cut
// distance l(y). Along a ray the area element is
//   gauge_B(nu(y)) (1 - t kappa(y)) |y'(theta)| dtheta dt.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "beancrit/convex_body.hpp"
#include "beancrit/core.hpp"
#include "beancrit/domain.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/parallel.hpp"

namespace beancrit {

struct DistanceResult {
  double value = 0.0;
  double theta = 0.0;  // parameter of a minimizing boundary point
  bool singular = false;
};

struct Projections {
  double value = 0.0;
  std::vector<double> thetas;  // one representative per cluster (capped)
  bool singular = false;
  bool capped = false;
};

/// Pointwise evaluator of d_B by coarse search over the boundary samples and
/// Brent refinement of the best local minima.
class MinkowskiDistance {
 public:
  static constexpr std::size_t kRefineCandidates = 4;
  static constexpr double kProjectionSlack = 1e-6;
  static constexpr double kClusterGap = 1e-3;

  MinkowskiDistance(const DomainBoundary& omega, ConvexBody body)
      : omega_(&omega), body_(std::move(body)) {
    const auto& s = omega.samples();
    px_.resize(s.size());
    py_.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      px_[i] = s[i].point.x;
      py_[i] = s[i].point.y;
    }
  }

  const DomainBoundary& domain() const { return *omega_; }
  const ConvexBody& body() const { return body_; }

  double operator()(Vec2 x) const { return query(x).value; }

  /// d_B(x) with OutsideDomain raised when x is farther than `tol` outside.
  double checked(Vec2 x, double tol) const {
    if (!omega_->contains(x) && omega_->euclidean_distance(x) > tol)
      throw Error(ErrorKind::OutsideDomain, "point lies outside the cross-section");
    return query(x).value;
  }

  DistanceResult query(Vec2 x) const {
    thread_local std::vector<double> f;
    coarse(x, f);
    const std::size_t n = f.size();
    const double dth = omega_->dtheta();
    // Best discrete local minima.
    std::array<std::size_t, kRefineCandidates> cand{};
    std::size_t nc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fi = f[i];
      if (fi > f[(i + n - 1) % n] || fi > f[(i + 1) % n]) continue;
      if (nc < kRefineCandidates) {
        cand[nc++] = i;
      } else {
        std::size_t worst = 0;
        for (std::size_t c = 1; c < nc; ++c)
          if (f[cand[c]] > f[cand[worst]]) worst = c;
        if (fi < f[cand[worst]]) cand[worst] = i;
      }
    }
    // Refinement can stall at a kink (x on the boundary), so sample values
    // stay candidates too.
    DistanceResult best{std::numeric_limits<double>::infinity(), 0.0, false};
    for (std::size_t c = 0; c < nc; ++c) {
      if (f[cand[c]] < best.value) {
        best.value = f[cand[c]];
        best.theta = static_cast<double>(cand[c]) * dth;
      }
    }
    const double sample_best = best.value;
    std::array<std::pair<double, double>, kRefineCandidates> refined{};
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t i = cand[c];
      refined[c] = {static_cast<double>(i) * dth, f[i]};
      // Skip minima that cannot come within the slack of the best one.
      if (lower_bound(f, i) > sample_best + kProjectionSlack) continue;
      const auto r = refine(x, i);
      if (r.second < refined[c].second) refined[c] = r;
      if (refined[c].second < best.value) {
        best.value = refined[c].second;
        best.theta = refined[c].first;
      }
    }
    for (std::size_t c = 0; c < nc; ++c) {
      if (refined[c].second <= best.value + kProjectionSlack &&
          angular_gap(refined[c].first, best.theta) > kClusterGap) {
        best.singular = true;
      }
    }
    best.theta = wrap_angle(best.theta);
    return best;
  }

  /// True when d_B(x) >= s - tol. Cheaper than a full query: exits on the
  /// first sample below the level and refines only minima that could be.
  bool attains(Vec2 x, double s, double tol) const {
    thread_local std::vector<double> f;
    const double level = s - tol;
    if (!coarse_above(x, level, f)) return false;
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] > f[(i + n - 1) % n] || f[i] > f[(i + 1) % n]) continue;
      if (lower_bound(f, i) >= level) continue;
      if (refine(x, i).second < level) return false;
    }
    return true;
  }

  /// All minimizing boundary parameters within the projection slack,
  /// clustered; more than one cluster (or a wide one) marks x singular.
  Projections projections(Vec2 x, std::size_t cap = 16) const {
    std::vector<double> f;
    coarse(x, f);
    const std::size_t n = f.size();
    const double dth = omega_->dtheta();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> pts;  // (theta, value)
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] > f[(i + n - 1) % n] || f[i] > f[(i + 1) % n]) continue;
      const auto r = refine(x, i);
      pts.push_back({wrap_angle(r.first), r.second});
      best = std::min(best, r.second);
    }
    for (std::size_t i = 0; i < n; ++i) {
      best = std::min(best, f[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (f[i] <= best + kProjectionSlack) pts.push_back({static_cast<double>(i) * dth, f[i]});
    std::erase_if(pts, [&](const auto& p) { return p.second > best + kProjectionSlack; });
    std::sort(pts.begin(), pts.end());
    Projections out;
    out.value = best;
    if (pts.empty()) return out;
    const double gap = std::max(kClusterGap, 1.5 * dth);
    // Start clustering after the largest cyclic gap.
    std::size_t start = 0;
    double largest = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double g = i == 0 ? pts[0].first + kTwoPi - pts.back().first : pts[i].first - pts[i - 1].first;
      if (g > largest) { largest = g; start = i; }
    }
    struct Cluster { double lo, hi, arg, val; };
    std::vector<Cluster> clusters;
    for (std::size_t m = 0; m < pts.size(); ++m) {
      const auto& p = pts[(start + m) % pts.size()];
      double th = p.first;
      if (!clusters.empty()) {
        double prev = clusters.back().hi;
        while (th < prev) th += kTwoPi;
        if (th - prev <= gap) {
          auto& c = clusters.back();
          c.hi = th;
          if (p.second < c.val) { c.val = p.second; c.arg = wrap_angle(th); }
          continue;
        }
      }
      clusters.push_back({th, th, wrap_angle(th), p.second});
    }
    bool wide = false;
    for (const auto& c : clusters) wide = wide || (c.hi - c.lo) > 0.05;
    out.singular = clusters.size() > 1 || wide;
    for (const auto& c : clusters) {
      if (out.thetas.size() >= cap) { out.capped = true; break; }
      out.thetas.push_back(c.arg);
    }
    return out;
  }

 private:
  static double angular_gap(double a, double b) {
    const double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
  }

  // For a local minimum at sample i, a bound below which the continuous
  // minimum nearby cannot fall (exact for a parabola, times four).
  static double lower_bound(const std::vector<double>& f, std::size_t i) {
    const std::size_t n = f.size();
    const double rise = std::max(f[(i + n - 1) % n], f[(i + 1) % n]) - f[i];
    return f[i] - rise;
  }

  // Fills f and returns true unless some sample lies below `level`.
  bool coarse_above(Vec2 x, double level, std::vector<double>& f) const {
    const std::size_t n = px_.size();
    f.resize(n);
    if (body_.shape() == ConvexBody::Shape::Ellipse) {
      const double a = body_.semi_axis_a(), b = body_.semi_axis_b();
      const Vec2 c = body_.center();
      constexpr std::size_t kBlock = 64;
      for (std::size_t lo = 0; lo < n; lo += kBlock) {
        const std::size_t hi = std::min(n, lo + kBlock);
        bool below = false;
        for (std::size_t i = lo; i < hi; ++i) {
          const double dx = x.x - px_[i], dy = x.y - py_[i];
          f[i] = c.x * dx + c.y * dy + std::sqrt(a * a * dx * dx + b * b * dy * dy);
          below |= f[i] < level;
        }
        if (below) return false;
      }
      return true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = body_.support(x - Vec2{px_[i], py_[i]});
      if (f[i] < level) return false;
    }
    return true;
  }

  void coarse(Vec2 x, std::vector<double>& f) const {
    const std::size_t n = px_.size();
    f.resize(n);
    if (body_.shape() == ConvexBody::Shape::Ellipse) {
      const double a = body_.semi_axis_a(), b = body_.semi_axis_b();
      const Vec2 c = body_.center();
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = x.x - px_[i], dy = x.y - py_[i];
        f[i] = c.x * dx + c.y * dy + std::sqrt(a * a * dx * dx + b * b * dy * dy);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) f[i] = body_.support(x - Vec2{px_[i], py_[i]});
    }
  }

  // Brent search on theta_i + u, u in [-dtheta, dtheta]; returns (theta, value).
  std::pair<double, double> refine(Vec2 x, std::size_t i) const {
    const double dth = omega_->dtheta();
    const double th0 = static_cast<double>(i) * dth;
    auto g = [&](double u) { return body_.support(x - omega_->point(th0 + u)); };
    const auto r = boost::math::tools::brent_find_minima(g, -dth, dth, std::numeric_limits<double>::digits / 2);
    return {th0 + r.first, r.second};
  }

  const DomainBoundary* omega_;
  ConvexBody body_;
  std::vector<double> px_, py_;
};

/// Rays of one body (K, or -K for the "minus" family) at the boundary samples.
struct HalfFan {
  std::vector<double> theta;
  std::vector<Vec2> point;
  std::vector<Vec2> normal;     // inward Euclidean normal
  std::vector<Vec2> direction;  // p(y) = D gauge(nu(y))
  std::vector<double> gauge_nu; // gauge(nu(y))
  std::vector<double> speed;    // |y'(theta)|
  std::vector<double> cut;      // l(y)
  std::vector<double> kappa;    // anisotropic curvature used downstream
  std::vector<double> kappa_weingarten;
  std::vector<double> kappa_jacobian;
  double m0 = 1.0;              // bound on the Jacobian ratio M_x(t)
  std::size_t kappa_fallbacks = 0;

  std::size_t size() const { return theta.size(); }
  double dtheta() const { return kTwoPi / static_cast<double>(theta.size()); }

  /// Periodic linear interpolation of a per-ray quantity at parameter t.
  double interpolate(const std::vector<double>& q, double t) const {
    const double s = wrap_angle(t) / dtheta();
    const std::size_t n = q.size();
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= n) i = n - 1;
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * q[i] + w * q[(i + 1) % n];
  }
  double cut_at(double t) const { return interpolate(cut, t); }
  double kappa_at(double t) const { return interpolate(kappa, t); }
};

struct RayFan {
  HalfFan plus;   // K: rays of d
  HalfFan minus;  // -K: rays of d^-
};

struct FanOptions {
  /// Inward offset (in units of the grid spacing) where D^2 d is sampled.
  double weingarten_offset_cells = 3.0;
  double grid_spacing = 0.0;  // 0: diameter / 512
  /// Bisection tolerance for l(y), relative to the diameter.
  double cut_tolerance = 1e-6;
  /// Relative disagreement above which the Jacobian curvature is used.
  double kappa_disagreement = 1e-2;
};

/// Geometry of the ray through boundary parameter theta for body `body`.
struct Ray {
  Vec2 point, normal, direction, tangent;
  double gauge_nu = 0.0, speed = 0.0, curvature = 0.0;
};

inline Ray ray_at(const DomainBoundary& omega, const ConvexBody& body, double theta) {
  const BoundarySample s = omega.sample_at(theta);
  Ray r;
  r.point = s.point;
  r.normal = s.inward_normal;
  r.tangent = s.tangent;
  r.speed = s.speed;
  r.curvature = s.curvature;
  r.gauge_nu = body.gauge(s.inward_normal);
  if (r.gauge_nu < 1e-12) throw Error(ErrorKind::DegenerateNormal, "gauge of the normal vanishes");
  r.direction = body.grad_gauge(s.inward_normal);
  return r;
}

/// Closed form of the ray-coordinate Jacobian: kappa * <T, D^2 gauge(nu) T>.
inline double kappa_from_jacobian(const ConvexBody& body, const Ray& r) {
  const Mat2 h = body.hess_gauge(r.normal);
  return r.curvature * dot(r.tangent, h * r.tangent);
}

/// Cut distance l(y): the largest t with d(y + s p) = s for s <= t.
inline double cut_distance(const MinkowskiDistance& dist, const Ray& r, double diam, double rel_tol) {
  const double plen = norm(r.direction);
  const double step = diam / (64.0 * plen);
  const double eq_tol = 1e-11 * std::max(1.0, diam);
  auto minimizing = [&](double s) { return dist.attains(r.point + s * r.direction, s, eq_tol); };
  double lo = 0.0, hi = 0.0;
  bool bracketed = false;
  for (int k = 1; k <= 4096; ++k) {
    const double s = step * k;
    if (!minimizing(s)) {
      hi = s;
      bracketed = true;
      break;
    }
    lo = s;
  }
  if (!bracketed) return lo;
  while (hi - lo > rel_tol * diam) {
    const double mid = 0.5 * (lo + hi);
    (minimizing(mid) ? lo : hi) = mid;
  }
  return lo;
}

/// Anisotropic curvature from W = -D^2 gauge(Dd) D^2 d, with D^2 d taken by
/// finite differences at x0 = y + delta p and transported back to y.
inline double kappa_from_weingarten(const MinkowskiDistance& dist, const Ray& r, double delta) {
  const double eta = std::min(0.5 * delta, 1e-3);
  const Vec2 x0 = r.point + delta * r.direction;
  auto d = [&](double dx, double dy) { return dist(x0 + Vec2{dx, dy}); };
  const double f0 = d(0, 0);
  const double dxx = (d(eta, 0) - 2 * f0 + d(-eta, 0)) / (eta * eta);
  const double dyy = (d(0, eta) - 2 * f0 + d(0, -eta)) / (eta * eta);
  const double dxy = (d(eta, eta) - d(eta, -eta) - d(-eta, eta) + d(-eta, -eta)) / (4 * eta * eta);
  const Mat2 hess_d{dxx, dxy, dxy, dyy};
  const Vec2 grad_d = r.normal / r.gauge_nu;
  const Mat2 w = (-1.0) * (dist.body().hess_gauge(grad_d) * hess_d);
  const double k_delta = dot(w * r.tangent, r.tangent);
  return k_delta / (1.0 + delta * k_delta);
}

inline HalfFan build_half_fan(const DomainBoundary& omega, const MinkowskiDistance& dist,
                              const FanOptions& opts) {
  const ConvexBody& body = dist.body();
  const std::size_t n = omega.size();
  const double diam = omega.diameter();
  const double h = opts.grid_spacing > 0.0 ? opts.grid_spacing : diam / 512.0;
  const double delta = opts.weingarten_offset_cells * h;
  HalfFan fan;
  fan.theta.resize(n);
  fan.point.resize(n);
  fan.normal.resize(n);
  fan.direction.resize(n);
  fan.gauge_nu.resize(n);
  fan.speed.resize(n);
  fan.cut.resize(n);
  fan.kappa.resize(n);
  fan.kappa_weingarten.resize(n);
  fan.kappa_jacobian.resize(n);
  std::vector<std::uint8_t> fallback(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const double th = omega.samples()[i].theta;
    const Ray r = ray_at(omega, body, th);
    fan.theta[i] = th;
    fan.point[i] = r.point;
    fan.normal[i] = r.normal;
    fan.direction[i] = r.direction;
    fan.gauge_nu[i] = r.gauge_nu;
    fan.speed[i] = r.speed;
    fan.cut[i] = cut_distance(dist, r, diam, opts.cut_tolerance);
    const double kj = kappa_from_jacobian(body, r);
    fan.kappa_jacobian[i] = kj;
    double kw = std::numeric_limits<double>::quiet_NaN();
    if (fan.cut[i] > 2.0 * delta) kw = kappa_from_weingarten(dist, r, delta);
    fan.kappa_weingarten[i] = kw;
    const bool agree = std::isfinite(kw) && std::abs(kw - kj) <= opts.kappa_disagreement * std::max(1.0, std::abs(kj));
    fan.kappa[i] = agree ? kw : kj;
    fallback[i] = agree ? 0 : 1;
  });
  fan.kappa_fallbacks = static_cast<std::size_t>(std::count(fallback.begin(), fallback.end(), 1));
  fan.m0 = 1.0;
  for (std::size_t i = 0; i < n; ++i) fan.m0 = std::max(fan.m0, 1.0 - fan.cut[i] * fan.kappa[i]);
  return fan;
}

/// M = (1 - t kappa) / (1 - t_from kappa) along ray i.
inline double jacobian_factor(const HalfFan& fan, std::size_t i, double t_from, double t,
                              double tol = 1e-9) {
  if (t > fan.cut[i] + tol) throw Error(ErrorKind::CutExceeded, "t beyond the cut distance");
  const double k = fan.kappa[i];
  const double num = std::max(0.0, 1.0 - t * k);
  const double den = 1.0 - t_from * k;
  if (!(den > 0.0)) return 0.0;
  return num / den;
}

/// Integral over the tube {y + t p(y) : 0 <= t < clip(y)} of `h` in ray
/// coordinates; composite trapezoid in t and in theta.
inline double change_of_variables_integrate(const HalfFan& fan,
                                            const std::function<double(Vec2)>& h,
                                            const std::function<double(std::size_t)>& clip,
                                            std::size_t t_nodes = 256) {
  const std::size_t n = fan.size();
  std::vector<double> per_ray(n, 0.0);
  std::vector<std::uint8_t> bad(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const double len = std::min(clip(i), fan.cut[i]);
    if (!(len > 0.0)) return;
    const double dt = len / static_cast<double>(t_nodes - 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < t_nodes; ++k) {
      const double t = dt * static_cast<double>(k);
      const double v = h(fan.point[i] + t * fan.direction[i]);
      if (!std::isfinite(v)) { bad[i] = 1; return; }
      const double w = (k == 0 || k + 1 == t_nodes) ? 0.5 : 1.0;
      acc += w * v * (1.0 - t * fan.kappa[i]);
    }
    per_ray[i] = fan.gauge_nu[i] * fan.speed[i] * acc * dt;
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end())
    throw Error(ErrorKind::InvalidField, "integrand is not finite along a ray");
  return pairwise_sum(per_ray) * fan.dtheta();
}

/// Distance values on the grid with the projection parameter per cell.
struct DistanceGrid {
  ScalarGrid value;
  std::vector<double> theta;
  std::vector<std::uint8_t> singular;
};

inline DistanceGrid distance_grid(const MinkowskiDistance& dist, const GridSpec& spec,
                                  const std::vector<std::uint8_t>& mask) {
  DistanceGrid g{ScalarGrid(spec, mask, 0.0), std::vector<double>(spec.size(), 0.0),
                 std::vector<std::uint8_t>(spec.size(), 0)};
  parallel_for(spec.size(), [&](std::size_t k) {
    if (!mask[k]) return;
    const DistanceResult r = dist.query(spec.center(k));
    g.value[k] = r.value;
    g.theta[k] = r.theta;
    g.singular[k] = r.singular ? 1 : 0;
  });
  return g;
}

struct FieldOptions {
  std::size_t nx = 512, ny = 512;
  FanOptions fan;
};

/// Everything the critical-state and evolution solvers need about (Omega, K):
/// d, d^- and their projections on the grid, and both ray fans.
class MinkowskiFields {
 public:
  MinkowskiFields(const DomainBoundary& omega, const ConvexBody& body, FieldOptions opts = {})
      : omega_(&omega),
        dist_(omega, body),
        dist_minus_(omega, body.reflected()),
        spec_(grid_over(omega, opts.nx, opts.ny)),
        mask_(inside_mask(spec_, omega)) {
    if (opts.fan.grid_spacing <= 0.0) opts.fan.grid_spacing = spec_.h;
    plus_ = distance_grid(dist_, spec_, mask_);
    minus_ = distance_grid(dist_minus_, spec_, mask_);
    fan_.plus = build_half_fan(omega, dist_, opts.fan);
    fan_.minus = build_half_fan(omega, dist_minus_, opts.fan);
    const double lip_plus = max_support(body), lip_minus = max_support(body.reflected());
    near_cut_plus_ = near_cut(plus_, fan_.plus, lip_plus);
    near_cut_minus_ = near_cut(minus_, fan_.minus, lip_minus);
  }

  const DomainBoundary& domain() const { return *omega_; }
  const ConvexBody& body() const { return dist_.body(); }
  const ConvexBody& body_minus() const { return dist_minus_.body(); }
  const MinkowskiDistance& distance() const { return dist_; }
  const MinkowskiDistance& distance_minus() const { return dist_minus_; }
  const GridSpec& spec() const { return spec_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  ScalarGrid blank(double fill = 0.0) const { return ScalarGrid(spec_, mask_, fill); }

  const DistanceGrid& plus() const { return plus_; }
  const DistanceGrid& minus() const { return minus_; }
  const ScalarGrid& d() const { return plus_.value; }
  const ScalarGrid& d_minus() const { return minus_.value; }
  const RayFan& fan() const { return fan_; }

  /// Cells whose projection is not unique or lies within two cells of the
  /// cut locus; finite-difference checks skip them.
  bool near_cut(std::size_t k) const { return near_cut_plus_[k] != 0; }
  bool near_cut_minus(std::size_t k) const { return near_cut_minus_[k] != 0; }

 private:
  static double max_support(const ConvexBody& body) {
    double m = 0.0;
    for (const auto& s : body.samples()) m = std::max(m, norm(s.point));
    return m;
  }

  std::vector<std::uint8_t> near_cut(const DistanceGrid& g, const HalfFan& fan, double lip) const {
    std::vector<std::uint8_t> flag(spec_.size(), 0);
    const double margin = 2.0 * std::sqrt(2.0) * spec_.h * lip;
    for (std::size_t k = 0; k < spec_.size(); ++k) {
      if (!mask_[k]) continue;
      flag[k] = (g.singular[k] || g.value[k] >= fan.cut_at(g.theta[k]) - margin) ? 1 : 0;
    }
    return flag;
  }

  const DomainBoundary* omega_;
  MinkowskiDistance dist_, dist_minus_;
  GridSpec spec_;
  std::vector<std::uint8_t> mask_;
  DistanceGrid plus_, minus_;
  RayFan fan_;
  std::vector<std::uint8_t> near_cut_plus_, near_cut_minus_;
};

}  // namespace beancrit
