#pragma once
// The constraint body K of the critical-state law and its polar.
//
// For a compact convex K with 0 in its interior:
//   gauge(xi)    = inf{t >= 0 : xi in tK}              (rho)
//   support(xi)  = max_{k in K} <xi, k> = gauge of K^0  (rho^0)
// The reflected body -K supplies the "minus" pair: gauge_{-K}(xi) =
// gauge_K(-xi) and support_{-K}(xi) = support_K(-xi).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "beancrit/core.hpp"
#include "beancrit/spline.hpp"

namespace beancrit {

struct BodySample {
  Vec2 point;
  Vec2 outward_normal;
  double curvature = 0.0;
};

/// Constants with c1 |xi| <= gauge(xi) <= c2 |xi|.
struct GaugeBounds {
  double c1 = 0.0;
  double c2 = 0.0;
};

class ConvexBody {
 public:
  enum class Shape { Ellipse, Parametric };

  static constexpr std::size_t kDefaultSamples = 4096;

  static ConvexBody disk(double radius, Vec2 center = {}) {
    return ellipse(radius, radius, center);
  }

  /// Axis-aligned ellipse with semi-axes a, b centered at `center`.
  static ConvexBody ellipse(double a, double b, Vec2 center = {}) {
    if (!(a > 0.0) || !(b > 0.0))
      throw Error(ErrorKind::InvalidBody, "ellipse semi-axes must be positive");
    ConvexBody k;
    k.shape_ = Shape::Ellipse;
    k.a_ = a;
    k.b_ = b;
    k.center_ = center;
    k.qc_ = center.x * center.x / (a * a) + center.y * center.y / (b * b);
    if (!(k.qc_ < 1.0))
      throw Error(ErrorKind::InvalidBody, "ellipse offset must keep the origin strictly interior");
    k.build_samples(kDefaultSamples);
    return k;
  }

  /// Body bounded by a closed curve through `boundary` (either orientation).
  static ConvexBody parametric(std::vector<Vec2> boundary) {
    if (boundary.size() < 8)
      throw Error(ErrorKind::InvalidBody, "parametric body needs at least 8 boundary points");
    double area2 = 0.0;
    for (std::size_t i = 0; i < boundary.size(); ++i)
      area2 += cross(boundary[i], boundary[(i + 1) % boundary.size()]);
    if (area2 < 0.0) std::reverse(boundary.begin(), boundary.end());
    ConvexBody k;
    k.shape_ = Shape::Parametric;
    k.spline_ = PeriodicSpline(std::move(boundary));
    const std::size_t n = k.spline_.size();
    // Unwrapped polar angle of every knot; monotone when 0 is interior.
    k.knot_angle_.resize(n + 1);
    double prev = std::atan2(k.spline_.knots()[0].y, k.spline_.knots()[0].x);
    k.knot_angle_[0] = prev;
    for (std::size_t i = 1; i <= n; ++i) {
      const Vec2 p = k.spline_.knots()[i % n];
      double a = std::atan2(p.y, p.x);
      while (a <= prev) a += kTwoPi;
      while (a - prev > kPi) a -= kTwoPi;
      if (!(a > prev))
        throw Error(ErrorKind::InvalidBody, "boundary is not star-shaped about the origin");
      k.knot_angle_[i] = a;
      prev = a;
    }
    if (std::abs(k.knot_angle_[n] - k.knot_angle_[0] - kTwoPi) > 1e-9)
      throw Error(ErrorKind::InvalidBody, "boundary must wind once around the origin");
    k.build_samples(n);
    return k;
  }

  Shape shape() const { return shape_; }
  double semi_axis_a() const { return a_; }
  double semi_axis_b() const { return b_; }
  Vec2 center() const { return center_; }
  const std::vector<BodySample>& samples() const { return samples_; }

  /// rho_K(xi); exactly 0 at the origin.
  double gauge(Vec2 xi) const {
    if (xi.x == 0.0 && xi.y == 0.0) return 0.0;
    if (shape_ == Shape::Ellipse) {
      const double bxc = xi.x * center_.x / (a_ * a_) + xi.y * center_.y / (b_ * b_);
      const double qx = xi.x * xi.x / (a_ * a_) + xi.y * xi.y / (b_ * b_);
      const double disc = std::sqrt(bxc * bxc + (1.0 - qc_) * qx);
      // Stable form of the positive root of (1-qc) t^2 + 2 bxc t - qx = 0.
      return bxc > 0.0 ? qx / (bxc + disc) : (disc - bxc) / (1.0 - qc_);
    }
    const Vec2 y = ray_boundary_point(xi);
    return dot(xi, y) / dot(y, y);
  }

  /// rho^0(xi): support function of K.
  double support(Vec2 xi) const {
    if (shape_ == Shape::Ellipse) {
      return dot(xi, center_) + std::hypot(a_ * xi.x, b_ * xi.y);
    }
    return dot(xi, support_point(xi));
  }

  /// D rho^0(xi): the point of K where <xi, .> is maximal.
  Vec2 support_point(Vec2 xi) const {
    if (xi.x == 0.0 && xi.y == 0.0) throw Error(ErrorKind::ZeroVector, "support_point at 0");
    if (shape_ == Shape::Ellipse) {
      const double r = std::hypot(a_ * xi.x, b_ * xi.y);
      return center_ + Vec2{a_ * a_ * xi.x / r, b_ * b_ * xi.y / r};
    }
    const auto& knots = spline_.knots();
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const double v = dot(xi, knots[i]);
      if (v > best_v) { best_v = v; best = i; }
    }
    const double s0 = static_cast<double>(best);
    const auto res = boost::math::tools::brent_find_minima(
        [&](double s) { return -dot(xi, spline_.eval(s).p); }, s0 - 1.0, s0 + 1.0,
        std::numeric_limits<double>::digits / 2);
    return spline_.eval(res.first).p;
  }

  /// D rho(xi). Throws ZeroVector for |xi| < 1e-14.
  Vec2 grad_gauge(Vec2 xi) const {
    check_nonzero(xi);
    if (shape_ == Shape::Ellipse) {
      const double t = gauge(xi);
      const Vec2 num{(xi.x - t * center_.x) / (a_ * a_), (xi.y - t * center_.y) / (b_ * b_)};
      return num / ellipse_den(xi, t);
    }
    // Outward normal at the boundary point on the ray, scaled so that
    // <D rho, y> = 1.
    const auto j = spline_.eval(ray_boundary_param(xi));
    const Vec2 n = -perp(j.d1) / norm(j.d1);
    return n / dot(n, j.p);
  }

  /// Central-difference gradient with step 1e-6 |xi|; cross-check only.
  Vec2 grad_gauge_fd(Vec2 xi) const {
    check_nonzero(xi);
    const double h = 1e-6 * norm(xi);
    return {(gauge(xi + Vec2{h, 0}) - gauge(xi - Vec2{h, 0})) / (2 * h),
            (gauge(xi + Vec2{0, h}) - gauge(xi - Vec2{0, h})) / (2 * h)};
  }

  /// D^2 rho(xi); symmetric, with xi in its null space.
  Mat2 hess_gauge(Vec2 xi) const {
    check_nonzero(xi);
    if (shape_ == Shape::Ellipse) {
      const double t = gauge(xi);
      const double den = ellipse_den(xi, t);
      const Vec2 g = grad_gauge(xi);
      const double ia = 1.0 / (a_ * a_), ib = 1.0 / (b_ * b_);
      // d/dxi of N/den with N = A^{-2}(xi - t c), den = (1-qc) t + <A^{-2} c, xi>.
      const Mat2 dn{ia * (1.0 - center_.x * g.x), -ia * center_.x * g.y,
                    -ib * center_.y * g.x, ib * (1.0 - center_.y * g.y)};
      const Vec2 dden = (1.0 - qc_) * g + Vec2{ia * center_.x, ib * center_.y};
      const Mat2 outer{g.x * dden.x, g.x * dden.y, g.y * dden.x, g.y * dden.y};
      Mat2 h = (1.0 / den) * (dn + (-1.0) * outer);
      const double off = 0.5 * (h.a12 + h.a21);
      h.a12 = h.a21 = off;
      return h;
    }
    // Level-set identity: <T, D^2 rho T> = kappa |D rho| on the boundary,
    // xi in the null space, degree -1 homogeneity off it.
    const auto j = spline_.eval(ray_boundary_param(xi));
    const double speed = norm(j.d1);
    const Vec2 t = j.d1 / speed;
    const Vec2 n = -perp(t);
    const double kappa = cross(j.d1, j.d2) / (speed * speed * speed);
    const double scale = kappa / dot(n, j.p) / gauge(xi);
    const Vec2 w = perp(j.p);
    const double wt = dot(w, t);
    const double c = scale / (wt * wt);
    return {c * w.x * w.x, c * w.x * w.y, c * w.x * w.y, c * w.y * w.y};
  }

  /// Central-difference Hessian with step 1e-5 |xi|; cross-check only.
  Mat2 hess_gauge_fd(Vec2 xi) const {
    check_nonzero(xi);
    const double h = 1e-5 * norm(xi);
    auto f = [&](double dx, double dy) { return gauge(xi + Vec2{dx, dy}); };
    const double f0 = f(0, 0);
    const double hxx = (f(h, 0) - 2 * f0 + f(-h, 0)) / (h * h);
    const double hyy = (f(0, h) - 2 * f0 + f(0, -h)) / (h * h);
    const double hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
    return {hxx, hxy, hxy, hyy};
  }

  /// -K, the point reflection through the origin.
  ConvexBody reflected() const {
    if (shape_ == Shape::Ellipse) return ellipse(a_, b_, -center_);
    std::vector<Vec2> pts = spline_.knots();
    for (auto& p : pts) p = -p;
    return parametric(std::move(pts));
  }

  GaugeBounds gauge_bounds() const {
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (const auto& s : samples_) {
      const double r = norm(s.point);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    return {(1.0 - 1e-6) / rmax, (1.0 + 1e-6) / rmin};
  }

  /// Min over samples of <point, outward normal>; positive iff 0 is interior.
  double interior_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples_) m = std::min(m, dot(s.point, s.outward_normal));
    return m;
  }

  double min_curvature() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples_) m = std::min(m, s.curvature);
    return m;
  }

 private:
  ConvexBody() = default;

  static void check_nonzero(Vec2 xi) {
    if (norm(xi) < 1e-14) throw Error(ErrorKind::ZeroVector, "gauge derivative requested at 0");
  }

  double ellipse_den(Vec2 xi, double t) const {
    const double bxc = xi.x * center_.x / (a_ * a_) + xi.y * center_.y / (b_ * b_);
    return (1.0 - qc_) * t + bxc;
  }

  Vec2 ray_boundary_point(Vec2 xi) const { return spline_.eval(ray_boundary_param(xi)).p; }

  // Spline parameter of the boundary point on the ray through xi.
  double ray_boundary_param(Vec2 xi) const {
    const std::size_t n = spline_.size();
    double phi = std::atan2(xi.y, xi.x);
    while (phi < knot_angle_[0]) phi += kTwoPi;
    while (phi >= knot_angle_[0] + kTwoPi) phi -= kTwoPi;
    auto it = std::upper_bound(knot_angle_.begin(), knot_angle_.end(), phi);
    std::size_t i = static_cast<std::size_t>(std::distance(knot_angle_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, n) - 1;
    const Vec2 dir = xi / norm(xi);
    auto f = [&](double s) { return cross(dir, spline_.eval(s).p); };
    double lo = static_cast<double>(i), hi = lo + 1.0;
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    // Spline overshoot can move the crossing into a neighbouring span.
    for (int k = 0; k < 4 && flo * fhi > 0.0; ++k) {
      lo -= 1.0;
      hi += 1.0;
      flo = f(lo);
      fhi = f(hi);
    }
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1), iters);
    return 0.5 * (r.first + r.second);
  }

  void build_samples(std::size_t n) {
    samples_.clear();
    samples_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      BodySample s;
      if (shape_ == Shape::Ellipse) {
        const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        const Vec2 d1{-a_ * std::sin(th), b_ * std::cos(th)};
        const Vec2 d2{-a_ * std::cos(th), -b_ * std::sin(th)};
        s.point = center_ + Vec2{a_ * std::cos(th), b_ * std::sin(th)};
        s.outward_normal = -perp(d1) / norm(d1);
        s.curvature = cross(d1, d2) / std::pow(norm(d1), 3);
      } else {
        const auto j = spline_.eval(static_cast<double>(i));
        s.point = j.p;
        s.outward_normal = -perp(j.d1) / norm(j.d1);
        s.curvature = cross(j.d1, j.d2) / std::pow(norm(j.d1), 3);
      }
      samples_.push_back(s);
    }
    if (!(interior_margin() > 0.0))
      throw Error(ErrorKind::InvalidBody, "origin is not interior to the body");
    if (!(min_curvature() > 0.0))
      throw Error(ErrorKind::InvalidBody, "body boundary must have strictly positive curvature");
  }

  Shape shape_ = Shape::Ellipse;
  double a_ = 1.0, b_ = 1.0, qc_ = 0.0;
  Vec2 center_{};
  PeriodicSpline spline_;
  std::vector<double> knot_angle_;
  std::vector<BodySample> samples_;
};

/// The polar body K^0 as a parametric body sampled at `n` directions.
inline ConvexBody polar_body(const ConvexBody& k, std::size_t n = 2048) {
  std::vector<Vec2> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    const Vec2 dir{std::cos(th), std::sin(th)};
    pts[i] = dir / k.support(dir);
  }
  return ConvexBody::parametric(std::move(pts));
}

}  // namespace beancrit
