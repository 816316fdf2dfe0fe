#pragma once

#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geobmo/domain.hpp"
#include "geobmo/dyadic.hpp"
#include "geobmo/grid_function.hpp"

namespace geobmo {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest text that reads back to the same double; "NaN", "inf", "-inf".
std::string format_number(double v);
double parse_number(const std::string& text);

// CSV with a versioned header:
//   # geobmo <kind> v1
//   # key=value        (optional metadata lines)
//   col1,col2,...
//   rows
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::string& kind, std::vector<std::string> columns,
            const std::vector<std::pair<std::string, std::string>>& meta = {});
  CsvWriter& cell(const std::string& text);
  CsvWriter& cell(const char* text) { return cell(std::string(text)); }
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(bool v) { return cell(static_cast<long long>(v ? 1 : 0)); }
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

struct CsvTable {
  std::string kind;
  int version = 0;
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws IoError when missing
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Grid file: kind "grid", metadata window=ox,oy,side and level=L, then n rows of
// n values (row 0 at the bottom of the window), NaN where undefined.
void write_grid(std::ostream& out, const GridFunction& g);
// Values are taken for the inside cells of `domain`; NaN inside cells become straddling.
GridFunction read_grid(std::istream& in, const Domain& domain);
GridFunction read_grid_file(const std::string& path, const Domain& domain);

// "1/256", "0.125", "2^-8".
double parse_fraction(const std::string& text);
Vec2 parse_point(const std::string& text);  // "x,y"
Window parse_window(const std::string& text);  // "ox,oy,side"
std::vector<double> parse_list(const std::string& text);  // "a,b,c", fractions allowed

// Static SVG in window coordinates (y up).
class SvgCanvas {
 public:
  SvgCanvas(const Box& view, int pixels = 800);

  void rect(const Box& b, const std::string& fill, const std::string& stroke = "none",
            double opacity = 1.0);
  void hatched(const Box& b, const std::string& color);
  void polyline(const std::vector<Vec2>& pts, const std::string& stroke, double width = 1.5);
  void circle(Vec2 c, double radius_px, const std::string& fill);
  void text(Vec2 at, const std::string& s, int size_px = 14);
  // sd = 0 contour by marching squares on a cells x cells lattice over the view.
  void contour(const Domain& domain, int cells, const std::string& stroke, double width = 1.5);
  // Cell colours from a blue-white-red map over [lo, hi]; NaN cells are skipped.
  void heatmap(const GridFunction& g, double lo, double hi);

  std::string str() const;
  void save(const std::string& path) const;

 private:
  double px(double x) const;
  double py(double y) const;
  Box view_;
  int pixels_;
  double scale_;
  bool hatch_defined_ = false;
  std::vector<std::string> defs_;
  std::vector<std::string> body_;
};

// Row-major marching-squares segments of the sd = 0 level set on a lattice.
std::vector<std::pair<Vec2, Vec2>> zero_contour(const Domain& domain, const Box& view, int cells);

}  // namespace geobmo
