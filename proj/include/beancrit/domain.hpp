#pragma once
// Cross-section boundary: a closed C^2 curve y(theta), theta in [0, 2*pi),
// oriented counterclockwise, with inward normals and curvature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "beancrit/core.hpp"

namespace beancrit {

/// Position and first two theta-derivatives of the boundary curve.
struct CurveJet {
  Vec2 p, d1, d2;
};

struct BoundarySample {
  double theta = 0.0;
  Vec2 point;
  Vec2 tangent;        // unit, counterclockwise
  Vec2 inward_normal;  // unit
  double speed = 0.0;  // |dy/dtheta|
  double curvature = 0.0;  // Euclidean, positive where convex
};

struct Box {
  Vec2 lo, hi;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

/// One radial Fourier mode of a perturbed disk: amplitude * cos(k theta + phase).
struct FourierMode {
  int k = 0;
  double amplitude = 0.0;
  double phase = 0.0;
};

class DomainBoundary {
 public:
  using CurveFn = std::function<CurveJet(double)>;

  static constexpr std::size_t kDefaultSamples = 2048;

  static DomainBoundary from_curve(std::string name, CurveFn fn,
                                   std::size_t n = kDefaultSamples) {
    if (n < 16) throw Error(ErrorKind::InvalidDomain, "need at least 16 boundary samples");
    DomainBoundary d;
    d.name_ = std::move(name);
    d.curve_ = std::move(fn);
    d.build(n);
    return d;
  }

  static DomainBoundary disk(double radius, Vec2 center = {}, std::size_t n = kDefaultSamples) {
    return ellipse(radius, radius, center, n);
  }

  static DomainBoundary ellipse(double a, double b, Vec2 center = {},
                                std::size_t n = kDefaultSamples) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::InvalidDomain, "semi-axes must be positive");
    auto fn = [a, b, center](double t) {
      const double c = std::cos(t), s = std::sin(t);
      return CurveJet{center + Vec2{a * c, b * s}, {-a * s, b * c}, {-a * c, -b * s}};
    };
    return from_curve(a == b ? "disk" : "ellipse", fn, n);
  }

  /// Cassini oval |x - f1| |x - f2| = b^2 with foci (+-a, 0); b > a gives a
  /// single closed curve, dented at the waist when b < sqrt(2) a.
  static DomainBoundary cassini_oval(double a, double b, Vec2 center = {},
                                     std::size_t n = kDefaultSamples) {
    if (!(a > 0.0) || !(b > a))
      throw Error(ErrorKind::InvalidDomain, "cassini oval needs 0 < a < b");
    const double a2 = a * a, a4 = a2 * a2, k = b * b * b * b - a4;
    auto radial = [=](double t, double& r, double& r1, double& r2) {
      const double c = std::cos(2 * t), s = std::sin(2 * t);
      const double q = std::sqrt(a4 * c * c + k);
      const double f = a2 * c + q;
      const double g = 0.5 * std::sin(4 * t);  // c*s
      const double f1 = -2 * a2 * s - 2 * a4 * g / q;
      const double q1 = -2 * a4 * g / q;
      const double f2 = -4 * a2 * c - 2 * a4 * (2 * std::cos(4 * t) * q - g * q1) / (q * q);
      r = std::sqrt(f);
      r1 = f1 / (2 * r);
      r2 = (0.5 * f2 - r1 * r1) / r;
    };
    auto fn = [radial, center](double t) {
      double r, r1, r2;
      radial(t, r, r1, r2);
      return polar_jet(center, t, r, r1, r2);
    };
    return from_curve("cassini_oval", fn, n);
  }

  /// r(theta) = R (1 + sum_k eps_k cos(k theta + phase_k)).
  static DomainBoundary perturbed_disk(double radius, std::vector<FourierMode> modes,
                                       Vec2 center = {}, std::size_t n = kDefaultSamples) {
    double total = 0.0;
    for (const auto& m : modes) total += std::abs(m.amplitude);
    if (!(radius > 0.0) || !(total < 1.0))
      throw Error(ErrorKind::InvalidDomain, "perturbation must keep the radius positive");
    auto fn = [radius, modes, center](double t) {
      double r = 1.0, r1 = 0.0, r2 = 0.0;
      for (const auto& m : modes) {
        const double arg = m.k * t + m.phase;
        r += m.amplitude * std::cos(arg);
        r1 -= m.amplitude * m.k * std::sin(arg);
        r2 -= m.amplitude * m.k * m.k * std::cos(arg);
      }
      return polar_jet(center, t, radius * r, radius * r1, radius * r2);
    };
    return from_curve("perturbed_disk", fn, n);
  }

  const std::string& name() const { return name_; }
  CurveJet jet(double theta) const { return curve_(theta); }
  Vec2 point(double theta) const { return curve_(theta).p; }

  BoundarySample sample_at(double theta) const {
    const CurveJet j = curve_(theta);
    BoundarySample s;
    s.theta = theta;
    s.point = j.p;
    s.speed = norm(j.d1);
    s.tangent = j.d1 / s.speed;
    s.inward_normal = perp(s.tangent);
    s.curvature = cross(j.d1, j.d2) / (s.speed * s.speed * s.speed);
    return s;
  }

  const std::vector<BoundarySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double dtheta() const { return kTwoPi / static_cast<double>(samples_.size()); }
  const Box& bbox() const { return bbox_; }
  double diameter() const { return diameter_; }
  double min_curvature() const { return min_curvature_; }

  /// Point-in-polygon (crossing number) against the sampled boundary.
  bool contains(Vec2 x) const {
    bool inside = false;
    const std::size_t n = samples_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 a = samples_[i].point, b = samples_[j].point;
      if ((a.y > x.y) != (b.y > x.y)) {
        const double xc = a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (x.x < xc) inside = !inside;
      }
    }
    return inside;
  }

  /// Sorted x coordinates where the horizontal line at height y crosses the
  /// sampled boundary; consecutive pairs bound interior intervals.
  std::vector<double> scanline_crossings(double y) const {
    std::vector<double> xs;
    const std::size_t n = samples_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 a = samples_[i].point, b = samples_[j].point;
      if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    return xs;
  }

  /// Euclidean distance from x to the sampled boundary polygon.
  double euclidean_distance(Vec2 x) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = samples_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = samples_[i].point, b = samples_[(i + 1) % n].point;
      const Vec2 ab = b - a;
      const double t = std::clamp(dot(x - a, ab) / dot(ab, ab), 0.0, 1.0);
      best = std::min(best, norm(x - (a + t * ab)));
    }
    return best;
  }

  double area() const {
    double a2 = 0.0;
    const std::size_t n = samples_.size();
    for (std::size_t i = 0; i < n; ++i) a2 += cross(samples_[i].point, samples_[(i + 1) % n].point);
    return 0.5 * a2;
  }

 private:
  DomainBoundary() = default;

  static CurveJet polar_jet(Vec2 c, double t, double r, double r1, double r2) {
    const Vec2 u{std::cos(t), std::sin(t)}, w = perp(u);
    return {c + r * u, r1 * u + r * w, (r2 - r) * u + 2.0 * r1 * w};
  }

  void build(std::size_t n) {
    samples_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      samples_[i] = sample_at(th);
      if (!(samples_[i].speed > 0.0) || !std::isfinite(samples_[i].curvature))
        throw Error(ErrorKind::InvalidDomain, "boundary curve is not regular at theta = " + std::to_string(th));
    }
    if (!(area() > 0.0))
      throw Error(ErrorKind::InvalidDomain, "boundary must wind counterclockwise (winding number +1)");
    check_simple();
    bbox_ = {{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
             {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
    min_curvature_ = std::numeric_limits<double>::infinity();
    for (const auto& s : samples_) {
      bbox_.lo.x = std::min(bbox_.lo.x, s.point.x);
      bbox_.lo.y = std::min(bbox_.lo.y, s.point.y);
      bbox_.hi.x = std::max(bbox_.hi.x, s.point.x);
      bbox_.hi.y = std::max(bbox_.hi.y, s.point.y);
      min_curvature_ = std::min(min_curvature_, s.curvature);
    }
    diameter_ = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, n / 512);
    for (std::size_t i = 0; i < n; i += stride)
      for (std::size_t j = i + stride; j < n; j += stride)
        diameter_ = std::max(diameter_, norm(samples_[i].point - samples_[j].point));
  }

  // Rejects self-intersecting polygons (non-adjacent edge crossings).
  void check_simple() const {
    const std::size_t n = samples_.size();
    auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = samples_[i].point, b = samples_[(i + 1) % n].point;
      const double minx = std::min(a.x, b.x), maxx = std::max(a.x, b.x);
      const double miny = std::min(a.y, b.y), maxy = std::max(a.y, b.y);
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        const Vec2 c = samples_[j].point, d = samples_[(j + 1) % n].point;
        if (std::max(c.x, d.x) < minx || std::min(c.x, d.x) > maxx ||
            std::max(c.y, d.y) < miny || std::min(c.y, d.y) > maxy)
          continue;
        if (orient(a, b, c) * orient(a, b, d) < 0.0 && orient(c, d, a) * orient(c, d, b) < 0.0)
          throw Error(ErrorKind::InvalidDomain, "boundary curve self-intersects");
      }
    }
  }

  std::string name_;
  CurveFn curve_;
  std::vector<BoundarySample> samples_;
  Box bbox_;
  double diameter_ = 0.0;
  double min_curvature_ = 0.0;
};

}  // namespace beancrit
