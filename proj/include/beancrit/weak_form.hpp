#pragma once
// Weak residuals of divergence-form equations
//   -div(c D rho(D q)) = f
// tested against a fixed bank of smooth bumps supported inside the domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "beancrit/convex_body.hpp"
#include "beancrit/domain.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/parallel.hpp"

namespace beancrit {

/// phi(x) = B((x - cx)/s) B((y - cy)/s) with B(z) = (1 - z^2)^4 on |z| < 1.
struct Bump {
  Vec2 center;
  double scale = 0.1;

  double value(Vec2 x) const {
    const double zx = (x.x - center.x) / scale, zy = (x.y - center.y) / scale;
    if (std::abs(zx) >= 1.0 || std::abs(zy) >= 1.0) return 0.0;
    return profile(zx) * profile(zy);
  }
  Vec2 gradient(Vec2 x) const {
    const double zx = (x.x - center.x) / scale, zy = (x.y - center.y) / scale;
    if (std::abs(zx) >= 1.0 || std::abs(zy) >= 1.0) return {};
    return Vec2{dprofile(zx) * profile(zy), profile(zx) * dprofile(zy)} / scale;
  }

 private:
  static double profile(double z) {
    const double q = 1.0 - z * z;
    return q * q * q * q;
  }
  static double dprofile(double z) {
    const double q = 1.0 - z * z;
    return -8.0 * z * q * q * q;
  }
};

/// Deterministic bank of bumps whose square supports stay a margin inside
/// the domain.
inline std::vector<Bump> make_test_bank(const DomainBoundary& omega, std::size_t count = 20,
                                        std::uint64_t seed = 20240611) {
  std::mt19937_64 rng(seed);
  const Box& b = omega.bbox();
  const double diam = omega.diameter();
  std::uniform_real_distribution<double> ux(b.lo.x, b.hi.x), uy(b.lo.y, b.hi.y);
  std::uniform_real_distribution<double> us(0.06 * diam, 0.2 * diam);
  std::vector<Bump> bank;
  for (std::size_t attempt = 0; bank.size() < count && attempt < 200000; ++attempt) {
    const Bump bump{{ux(rng), uy(rng)}, us(rng)};
    if (!omega.contains(bump.center)) continue;
    if (omega.euclidean_distance(bump.center) < std::sqrt(2.0) * bump.scale + 0.02 * diam) continue;
    bank.push_back(bump);
  }
  if (bank.size() < count) throw Error(ErrorKind::InvalidDomain, "could not place the test bank inside the domain");
  return bank;
}

struct WeakResidual {
  double max_residual = 0.0;  // max over the bank of |lhs - rhs| / ||phi||
  std::vector<double> per_bump;
};

/// Evaluates, for each bump, |int c <D rho(Dq), D phi> - int f phi| / ||phi||_2
/// by midpoint quadrature on the inside cells.
inline WeakResidual weak_residual(const ScalarGrid& c, const ScalarGrid& q, const ScalarGrid& f,
                                  const ConvexBody& body, const std::vector<Bump>& bank) {
  const GridSpec& g = q.spec();
  // Flux c D rho(Dq) per cell.
  std::vector<Vec2> flux(g.size());
  parallel_for(g.ny, [&](std::size_t j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!q.inside(k) || c[k] == 0.0) continue;
      const Vec2 dq = q.gradient(i, j);
      if (norm(dq) < 1e-12) continue;
      flux[k] = c[k] * body.grad_gauge(dq);
    }
  });
  WeakResidual out;
  out.per_bump.resize(bank.size());
  const double area = g.h * g.h;
  parallel_for(bank.size(), [&](std::size_t b) {
    const Bump& bump = bank[b];
    const double s = bump.scale;
    const auto lo_i = static_cast<long>(std::floor((bump.center.x - s - g.origin.x) / g.h)) - 1;
    const auto hi_i = static_cast<long>(std::ceil((bump.center.x + s - g.origin.x) / g.h)) + 1;
    const auto lo_j = static_cast<long>(std::floor((bump.center.y - s - g.origin.y) / g.h)) - 1;
    const auto hi_j = static_cast<long>(std::ceil((bump.center.y + s - g.origin.y) / g.h)) + 1;
    std::vector<double> lhs, rhs, nrm;
    for (long j = std::max(0L, lo_j); j <= std::min<long>(hi_j, static_cast<long>(g.ny) - 1); ++j) {
      for (long i = std::max(0L, lo_i); i <= std::min<long>(hi_i, static_cast<long>(g.nx) - 1); ++i) {
        const std::size_t k = g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (!q.inside(k)) continue;
        const Vec2 x = g.center(k);
        const double phi = bump.value(x);
        lhs.push_back(dot(flux[k], bump.gradient(x)));
        rhs.push_back(f[k] * phi);
        nrm.push_back(phi * phi);
      }
    }
    const double l = pairwise_sum(lhs) * area, r = pairwise_sum(rhs) * area;
    const double n = std::sqrt(pairwise_sum(nrm) * area);
    out.per_bump[b] = n > 0.0 ? std::abs(l - r) / n : 0.0;
  });
  for (double r : out.per_bump) out.max_residual = std::max(out.max_residual, r);
  return out;
}

}  // namespace beancrit
