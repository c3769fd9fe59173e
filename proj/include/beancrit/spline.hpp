#pragma once
// Periodic cubic interpolating spline through closed-curve samples,
// parameterized by sample index s in [0, n).

#include <cmath>
#include <cstddef>
#include <vector>

#include "beancrit/core.hpp"

namespace beancrit {

class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  explicit PeriodicSpline(std::vector<Vec2> knots) : knots_(std::move(knots)) {
    const std::size_t n = knots_.size();
    if (n < 4) throw Error(ErrorKind::InvalidBody, "periodic spline needs at least 4 knots");
    std::vector<double> rx(n), ry(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 prev = knots_[(i + n - 1) % n];
      const Vec2 next = knots_[(i + 1) % n];
      const Vec2 r = 3.0 * (next - 2.0 * knots_[i] + prev);
      rx[i] = r.x;
      ry[i] = r.y;
    }
    const auto mx = solve_cyclic(rx);
    const auto my = solve_cyclic(ry);
    second_.resize(n);
    for (std::size_t i = 0; i < n; ++i) second_[i] = {2.0 * mx[i], 2.0 * my[i]};
  }

  std::size_t size() const { return knots_.size(); }
  const std::vector<Vec2>& knots() const { return knots_; }

  struct Jet {
    Vec2 p, d1, d2;
  };

  Jet eval(double s) const {
    const double n = static_cast<double>(knots_.size());
    s = std::fmod(s, n);
    if (s < 0.0) s += n;
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= knots_.size()) i = knots_.size() - 1;
    const std::size_t j = (i + 1) % knots_.size();
    const double t = s - static_cast<double>(i);
    const Vec2 p0 = knots_[i], p1 = knots_[j];
    const Vec2 m0 = second_[i], m1 = second_[j];
    // Cubic Hermite form in terms of end second derivatives (unit spacing).
    const double a = 1.0 - t, b = t;
    Jet out;
    out.p = a * p0 + b * p1 + ((a * a * a - a) / 6.0) * m0 + ((b * b * b - b) / 6.0) * m1;
    out.d1 = (p1 - p0) - ((3.0 * a * a - 1.0) / 6.0) * m0 + ((3.0 * b * b - 1.0) / 6.0) * m1;
    out.d2 = a * m0 + b * m1;
    return out;
  }

 private:
  // Solves the cyclic system m[i-1] + 4 m[i] + m[i+1] = r[i] by
  // Sherman-Morrison on top of the Thomas algorithm.
  static std::vector<double> solve_cyclic(const std::vector<double>& r) {
    const std::size_t n = r.size();
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0);
    diag[0] = 4.0 - gamma;
    diag[n - 1] = 4.0 - 1.0 / gamma;
    auto thomas = [&](std::vector<double> rhs) {
      std::vector<double> c(n), d(n);
      c[0] = 1.0 / diag[0];
      d[0] = rhs[0] / diag[0];
      for (std::size_t i = 1; i < n; ++i) {
        const double m = diag[i] - c[i - 1];
        c[i] = 1.0 / m;
        d[i] = (rhs[i] - d[i - 1]) / m;
      }
      std::vector<double> x(n);
      x[n - 1] = d[n - 1];
      for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
      return x;
    };
    const auto y = thomas(r);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const auto z = thomas(u);
    const double vy = y[0] + y[n - 1] / gamma;
    const double vz = z[0] + z[n - 1] / gamma;
    const double f = vy / (1.0 + vz);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - f * z[i];
    return x;
  }

  std::vector<Vec2> knots_;
  std::vector<Vec2> second_;
};

}  // namespace beancrit
