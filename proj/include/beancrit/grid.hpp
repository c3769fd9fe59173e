#pragma once
// Uniform cell-centered sampling of scalar fields over the bounding box of
// the cross-section, with an inside mask.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "beancrit/core.hpp"
#include "beancrit/domain.hpp"
#include "beancrit/parallel.hpp"

namespace beancrit {

struct GridSpec {
  std::size_t nx = 0, ny = 0;
  Vec2 origin;  // lower-left corner of cell (0, 0)
  double h = 0.0;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  Vec2 center(std::size_t i, std::size_t j) const {
    return origin + Vec2{(static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h};
  }
  Vec2 center(std::size_t k) const { return center(k % nx, k / nx); }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Square cells covering the domain's bounding box; the longer side is
/// split into exactly nx (resp. ny) cells.
inline GridSpec grid_over(const DomainBoundary& omega, std::size_t nx, std::size_t ny) {
  const Box& b = omega.bbox();
  const double h = std::max(b.width() / static_cast<double>(nx), b.height() / static_cast<double>(ny));
  const Vec2 mid = 0.5 * (b.lo + b.hi);
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.h = h;
  g.origin = mid - 0.5 * Vec2{h * static_cast<double>(nx), h * static_cast<double>(ny)};
  return g;
}

/// Inside mask consistent with DomainBoundary::contains.
inline std::vector<std::uint8_t> inside_mask(const GridSpec& g, const DomainBoundary& omega) {
  std::vector<std::uint8_t> mask(g.size(), 0);
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double y = g.center(0, j).y;
    const auto xs = omega.scanline_crossings(y);
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = g.center(i, j).x;
      const auto crossings = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
      mask[g.index(i, j)] = static_cast<std::uint8_t>((xs.size() - crossings) % 2 == 1);
    }
  }
  return mask;
}

class ScalarGrid {
 public:
  ScalarGrid() = default;
  ScalarGrid(GridSpec spec, std::vector<std::uint8_t> mask, double fill = 0.0)
      : spec_(spec), mask_(std::move(mask)), values_(spec.size(), fill) {
    if (mask_.size() != spec_.size()) throw Error(ErrorKind::ShapeMismatch, "mask size differs from grid");
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::size_t size() const { return values_.size(); }
  bool inside(std::size_t k) const { return mask_[k] != 0; }
  bool inside(std::size_t i, std::size_t j) const { return mask_[spec_.index(i, j)] != 0; }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(std::size_t i, std::size_t j) { return values_[spec_.index(i, j)]; }
  double at(std::size_t i, std::size_t j) const { return values_[spec_.index(i, j)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// Same layout, every value set to `fill`.
  ScalarGrid like(double fill = 0.0) const { return ScalarGrid(spec_, mask_, fill); }

  /// Bilinear interpolation over inside cells; outside corners are dropped
  /// and the remaining weights renormalized. NaN when no inside cell is near.
  double sample(Vec2 x) const {
    const double fx = (x.x - spec_.origin.x) / spec_.h - 0.5;
    const double fy = (x.y - spec_.origin.y) / spec_.h - 0.5;
    const long nx = static_cast<long>(spec_.nx), ny = static_cast<long>(spec_.ny);
    const long i0 = std::clamp(static_cast<long>(std::floor(fx)), 0L, nx - 2);
    const long j0 = std::clamp(static_cast<long>(std::floor(fy)), 0L, ny - 2);
    const double tx = std::clamp(fx - static_cast<double>(i0), 0.0, 1.0);
    const double ty = std::clamp(fy - static_cast<double>(j0), 0.0, 1.0);
    double acc = 0.0, wsum = 0.0;
    const double wts[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const long ii[4] = {i0, i0 + 1, i0, i0 + 1};
    const long jj[4] = {j0, j0, j0 + 1, j0 + 1};
    for (int c = 0; c < 4; ++c) {
      const std::size_t k = spec_.index(static_cast<std::size_t>(ii[c]), static_cast<std::size_t>(jj[c]));
      if (mask_[k] && wts[c] > 0.0) {
        acc += wts[c] * values_[k];
        wsum += wts[c];
      }
    }
    if (wsum > 1e-12) return acc / wsum;
    // Nearest inside cell within two cells.
    const long ic = std::clamp(static_cast<long>(std::lround(fx)), 0L, nx - 1);
    const long jc = std::clamp(static_cast<long>(std::lround(fy)), 0L, ny - 1);
    double best = std::numeric_limits<double>::infinity(), val = std::numeric_limits<double>::quiet_NaN();
    for (long dj = -2; dj <= 2; ++dj)
      for (long di = -2; di <= 2; ++di) {
        const long i = ic + di, j = jc + dj;
        if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
        const std::size_t k = spec_.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (!mask_[k]) continue;
        const double dist = norm(spec_.center(k) - x);
        if (dist < best) { best = dist; val = values_[k]; }
      }
    return val;
  }

  /// Central-difference gradient, one-sided where a neighbour is outside.
  Vec2 gradient(std::size_t i, std::size_t j) const {
    auto partial = [&](bool has_m, bool has_p, double vm, double v0, double vp) {
      if (has_m && has_p) return (vp - vm) / (2.0 * spec_.h);
      if (has_p) return (vp - v0) / spec_.h;
      if (has_m) return (v0 - vm) / spec_.h;
      return 0.0;
    };
    const double v0 = at(i, j);
    const bool xm = i > 0 && inside(i - 1, j), xp = i + 1 < spec_.nx && inside(i + 1, j);
    const bool ym = j > 0 && inside(i, j - 1), yp = j + 1 < spec_.ny && inside(i, j + 1);
    return {partial(xm, xp, xm ? at(i - 1, j) : 0.0, v0, xp ? at(i + 1, j) : 0.0),
            partial(ym, yp, ym ? at(i, j - 1) : 0.0, v0, yp ? at(i, j + 1) : 0.0)};
  }

  /// True when all four axis neighbours are inside (full central stencil).
  bool interior_stencil(std::size_t i, std::size_t j) const {
    return i > 0 && j > 0 && i + 1 < spec_.nx && j + 1 < spec_.ny && inside(i - 1, j) &&
           inside(i + 1, j) && inside(i, j - 1) && inside(i, j + 1);
  }

  /// Integral over inside cells (midpoint rule, pairwise summation).
  double integral() const {
    std::vector<double> terms;
    terms.reserve(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (mask_[k]) terms.push_back(values_[k]);
    return pairwise_sum(terms) * spec_.h * spec_.h;
  }

  double max_inside() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (mask_[k]) m = std::max(m, values_[k]);
    return m;
  }
  double min_inside() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (mask_[k]) m = std::min(m, values_[k]);
    return m;
  }

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> values_;
};

/// L2 norm over inside cells of a - b.
inline double l2_difference(const ScalarGrid& a, const ScalarGrid& b) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.inside(k)) terms.push_back((a[k] - b[k]) * (a[k] - b[k]));
  return std::sqrt(pairwise_sum(terms) * a.spec().h * a.spec().h);
}

inline double l2_norm(const ScalarGrid& a) { return l2_difference(a, a.like(0.0)); }

inline double max_abs_difference(const ScalarGrid& a, const ScalarGrid& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.inside(k)) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace beancrit
