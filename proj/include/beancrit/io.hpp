#pragma once
// Plain CSV export and import. Numbers are written with std::to_chars
// (shortest round-trip form), so identical runs give identical bytes and a
// grid read back is bit-identical to the one written.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "beancrit/contour.hpp"
#include "beancrit/evolution.hpp"
#include "beancrit/grid.hpp"
#include "beancrit/minkowski.hpp"

namespace beancrit {

inline std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string fmt(std::size_t x) { return std::to_string(x); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorKind::FormatError, "cannot open " + path.string() + " for writing");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Columns i,j,x,y,inside,value over every cell; outside cells carry 0.
inline void write_grid_csv(const std::filesystem::path& path, const ScalarGrid& g) {
  CsvWriter w(path, {"i", "j", "x", "y", "inside", "value"});
  const GridSpec& s = g.spec();
  for (std::size_t j = 0; j < s.ny; ++j)
    for (std::size_t i = 0; i < s.nx; ++i) {
      const std::size_t k = s.index(i, j);
      const Vec2 c = s.center(i, j);
      w.row({fmt(i), fmt(j), fmt(c.x), fmt(c.y), g.inside(k) ? "1" : "0", fmt(g.inside(k) ? g[k] : 0.0)});
    }
}

/// Several fields on one layout: i,j,x,y,inside,<names...>.
inline void write_fields_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                             const std::vector<const ScalarGrid*>& fields) {
  std::vector<std::string> header{"i", "j", "x", "y", "inside"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(path, header);
  const GridSpec& s = fields.front()->spec();
  for (std::size_t j = 0; j < s.ny; ++j)
    for (std::size_t i = 0; i < s.nx; ++i) {
      const std::size_t k = s.index(i, j);
      const Vec2 c = s.center(i, j);
      const bool in = fields.front()->inside(k);
      std::vector<std::string> row{fmt(i), fmt(j), fmt(c.x), fmt(c.y), in ? "1" : "0"};
      for (const ScalarGrid* f : fields) row.push_back(fmt(in ? (*f)[k] : 0.0));
      w.row(row);
    }
}

inline void write_fan_csv(const std::filesystem::path& path, const RayFan& fan) {
  CsvWriter w(path, {"theta", "x", "y", "px", "py", "rho_nu", "l", "kappa", "pmx", "pmy", "rho_nu_minus",
                     "l_minus", "kappa_minus"});
  const HalfFan& a = fan.plus;
  const HalfFan& b = fan.minus;
  for (std::size_t i = 0; i < a.size(); ++i)
    w.row({fmt(a.theta[i]), fmt(a.point[i].x), fmt(a.point[i].y), fmt(a.direction[i].x), fmt(a.direction[i].y),
           fmt(a.gauge_nu[i]), fmt(a.cut[i]), fmt(a.kappa[i]), fmt(b.direction[i].x), fmt(b.direction[i].y),
           fmt(b.gauge_nu[i]), fmt(b.cut[i]), fmt(b.kappa[i])});
}

inline void write_lambda_csv(const std::filesystem::path& path, const HalfFan& fan, const ClipLengths& lambda) {
  CsvWriter w(path, {"theta", "lambda", "lambda_minus"});
  for (std::size_t i = 0; i < fan.size(); ++i) w.row({fmt(fan.theta[i]), fmt(lambda.plus[i]), fmt(lambda.minus[i])});
}

inline void write_labels_csv(const std::filesystem::path& path, const ScalarGrid& layout,
                             const std::vector<Region>& regions) {
  CsvWriter w(path, {"i", "j", "x", "y", "inside", "label"});
  const GridSpec& s = layout.spec();
  for (std::size_t j = 0; j < s.ny; ++j)
    for (std::size_t i = 0; i < s.nx; ++i) {
      const std::size_t k = s.index(i, j);
      const Vec2 c = s.center(i, j);
      w.row({fmt(i), fmt(j), fmt(c.x), fmt(c.y), layout.inside(k) ? "1" : "0",
             std::to_string(static_cast<int>(regions[k]))});
    }
}

inline void write_vector_csv(const std::filesystem::path& path, const VectorGrid& e) {
  write_fields_csv(path, {"Ex", "Ey"}, {&e.x, &e.y});
}

/// Columns x,y,line: every polyline in order, tagged with its index.
inline void write_front_csv(const std::filesystem::path& path, const std::vector<Polyline>& lines) {
  CsvWriter w(path, {"x", "y", "line"});
  for (std::size_t l = 0; l < lines.size(); ++l)
    for (const Vec2& p : lines[l]) w.row({fmt(p.x), fmt(p.y), fmt(l)});
}

struct LevelSet {
  std::string field;
  double level = 0.0;
  std::vector<Polyline> lines;
};

/// Columns field,level,line,x,y: contour polylines of several fields.
inline void write_levels_csv(const std::filesystem::path& path, const std::vector<LevelSet>& sets) {
  CsvWriter w(path, {"field", "level", "line", "x", "y"});
  for (const auto& s : sets)
    for (std::size_t l = 0; l < s.lines.size(); ++l)
      for (const Vec2& p : s.lines[l]) w.row({s.field, fmt(s.level), fmt(l), fmt(p.x), fmt(p.y)});
}

inline void write_loop_csv(const std::filesystem::path& path, const std::vector<LoopSample>& loop) {
  CsvWriter w(path, {"t", "Hs", "M"});
  for (const auto& s : loop) w.row({fmt(s.t), fmt(s.H), fmt(s.M)});
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw Error(ErrorKind::FormatError, "bad number '" + s + "' in " + what);
  return v;
}

}  // namespace detail

/// Reads a grid CSV (columns i, j, value required) onto `layout`, whose mask
/// comes from the domain. Throws FormatError for a missing column or bad
/// number, ShapeMismatch when the cell counts differ.
inline ScalarGrid load_initial_field(const std::filesystem::path& path, const ScalarGrid& layout) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FormatError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, path.string() + " is empty");
  const auto header = detail::split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  for (const char* need : {"i", "j", "value"})
    if (!col.count(need)) throw Error(ErrorKind::FormatError, "missing column '" + std::string(need) + "' in " + path.string());
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::vector<Entry> entries;
  std::size_t nx = 0, ny = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() < header.size())
      throw Error(ErrorKind::FormatError, "line " + std::to_string(lineno) + " has too few columns");
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto i = detail::parse_number<std::size_t>(cells[col["i"]], where);
    const auto j = detail::parse_number<std::size_t>(cells[col["j"]], where);
    entries.push_back({i, j, detail::parse_number<double>(cells[col["value"]], where)});
    nx = std::max(nx, i + 1);
    ny = std::max(ny, j + 1);
  }
  const GridSpec& s = layout.spec();
  if (nx != s.nx || ny != s.ny || entries.size() != s.size())
    throw Error(ErrorKind::ShapeMismatch, "file grid is " + std::to_string(nx) + "x" + std::to_string(ny) +
                                              ", expected " + std::to_string(s.nx) + "x" + std::to_string(s.ny));
  ScalarGrid g = layout.like(0.0);
  for (const auto& e : entries) {
    const std::size_t k = s.index(e.i, e.j);
    if (g.inside(k)) g[k] = e.v;
  }
  return g;
}

/// Boundary points of a parametric body: CSV with columns x, y.
inline std::vector<Vec2> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FormatError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, path.string() + " is empty");
  const auto header = detail::split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  for (const char* need : {"x", "y"})
    if (!col.count(need)) throw Error(ErrorKind::FormatError, "missing column '" + std::string(need) + "' in " + path.string());
  std::vector<Vec2> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() < header.size())
      throw Error(ErrorKind::FormatError, "line " + std::to_string(lineno) + " has too few columns");
    const std::string where = path.string() + ":" + std::to_string(lineno);
    pts.push_back({detail::parse_number<double>(cells[col["x"]], where), detail::parse_number<double>(cells[col["y"]], where)});
  }
  return pts;
}

}  // namespace beancrit
