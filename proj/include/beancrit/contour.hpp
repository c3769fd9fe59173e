#pragma once
// Marching squares over the cell centers of a ScalarGrid.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "beancrit/grid.hpp"

namespace beancrit {

using Polyline = std::vector<Vec2>;

/// Level-set polylines of `f` at `level`. Cells outside the mask take the
/// value `outside`. Closed loops repeat their first point at the end.
inline std::vector<Polyline> contour_lines(const ScalarGrid& f, double level, double outside) {
  const GridSpec& g = f.spec();
  auto val = [&](std::size_t i, std::size_t j) { return f.inside(i, j) ? f.at(i, j) : outside; };
  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2k, vertical (i,j)-(i,j+1) -> 2k+1.
  auto h_edge = [&](std::size_t i, std::size_t j) { return std::int64_t(2 * g.index(i, j)); };
  auto v_edge = [&](std::size_t i, std::size_t j) { return std::int64_t(2 * g.index(i, j) + 1); };
  auto point_on = [&](std::int64_t e) {
    const std::size_t k = static_cast<std::size_t>(e / 2);
    const std::size_t i = k % g.nx, j = k / g.nx;
    const bool horizontal = e % 2 == 0;
    const std::size_t i2 = horizontal ? i + 1 : i, j2 = horizontal ? j : j + 1;
    const double a = val(i, j), b = val(i2, j2);
    const double s = (a == b) ? 0.5 : (level - a) / (b - a);
    return g.center(i, j) + s * (g.center(i2, j2) - g.center(i, j));
  };
  std::vector<std::pair<std::int64_t, std::int64_t>> segments;
  for (std::size_t j = 0; j + 1 < g.ny; ++j) {
    for (std::size_t i = 0; i + 1 < g.nx; ++i) {
      const double v0 = val(i, j), v1 = val(i + 1, j), v2 = val(i + 1, j + 1), v3 = val(i, j + 1);
      const int code = (v0 > level ? 1 : 0) | (v1 > level ? 2 : 0) | (v2 > level ? 4 : 0) | (v3 > level ? 8 : 0);
      if (code == 0 || code == 15) continue;
      const std::int64_t bottom = h_edge(i, j), right = v_edge(i + 1, j), top = h_edge(i, j + 1), left = v_edge(i, j);
      const bool center_high = 0.25 * (v0 + v1 + v2 + v3) > level;
      switch (code) {
        case 1: case 14: segments.push_back({left, bottom}); break;
        case 2: case 13: segments.push_back({bottom, right}); break;
        case 3: case 12: segments.push_back({left, right}); break;
        case 4: case 11: segments.push_back({right, top}); break;
        case 6: case 9: segments.push_back({bottom, top}); break;
        case 7: case 8: segments.push_back({left, top}); break;
        case 5:
          if (center_high) { segments.push_back({left, top}); segments.push_back({bottom, right}); }
          else { segments.push_back({left, bottom}); segments.push_back({right, top}); }
          break;
        case 10:
          if (center_high) { segments.push_back({left, bottom}); segments.push_back({right, top}); }
          else { segments.push_back({left, top}); segments.push_back({bottom, right}); }
          break;
        default: break;
      }
    }
  }
  // Chain segments through shared edges. Every edge is used by at most two
  // segments.
  std::map<std::int64_t, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    by_edge[segments[s].first].push_back(s);
    by_edge[segments[s].second].push_back(s);
  }
  std::vector<std::uint8_t> used(segments.size(), 0);
  auto next_from = [&](std::int64_t edge, std::size_t cur) -> long {
    for (std::size_t s : by_edge[edge])
      if (s != cur && !used[s]) return static_cast<long>(s);
    return -1;
  };
  std::vector<Polyline> lines;
  // Open chains start at edges with a single segment; then closed loops.
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (by_edge[segments[s].first].size() == 1 || by_edge[segments[s].second].size() == 1) order.push_back(s);
  for (std::size_t s = 0; s < segments.size(); ++s) order.push_back(s);
  for (std::size_t start : order) {
    if (used[start]) continue;
    used[start] = 1;
    std::int64_t head = segments[start].first, tail = segments[start].second;
    if (by_edge[tail].size() == 1 && by_edge[head].size() != 1) std::swap(head, tail);
    std::vector<std::int64_t> edges{head, tail};
    std::size_t cur = start;
    for (;;) {
      const long nxt = next_from(edges.back(), cur);
      if (nxt < 0) break;
      cur = static_cast<std::size_t>(nxt);
      used[cur] = 1;
      const auto& sg = segments[cur];
      edges.push_back(sg.first == edges.back() ? sg.second : sg.first);
    }
    Polyline line;
    line.reserve(edges.size());
    for (auto e : edges) line.push_back(point_on(e));
    lines.push_back(std::move(line));
  }
  return lines;
}

/// Signed area enclosed by a closed polyline (shoelace).
inline double enclosed_area(const Polyline& p) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) a += cross(p[i], p[i + 1]);
  if (!p.empty()) a += cross(p.back(), p.front());
  return 0.5 * a;
}

}  // namespace beancrit
