#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geobmo/domain.hpp"
#include "geobmo/dyadic.hpp"

namespace geobmo {

class QhError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Polyline {
  std::vector<Vec2> points;

  double euclidean_length() const;
  // Point at arclength fraction s in [0, 1].
  Vec2 at_fraction(double s) const;
};

struct QhLength {
  double value = 0.0;
  double err = 0.0;
  bool flagged = false;  // tolerance not reached within the recursion budget
};

// Adaptive Simpson quadrature of ds / sd along each segment. Subintervals are
// split until the Richardson estimate meets tol * value and sd(mid) exceeds the
// half-length, which certifies the segment lies in Omega. Throws QhError when
// the curve leaves Omega or comes within 1e-12 W of the boundary.
QhLength qh_length(const Domain& domain, const Polyline& gamma, double tol = 1e-6);
QhLength qh_segment_length(const Domain& domain, Vec2 a, Vec2 b, double tol = 1e-6);

// The closed segment [a, b] lies in Omega (recursive ball cover).
bool segment_inside(const Domain& domain, Vec2 a, Vec2 b);

double j_distance(const Domain& domain, Vec2 x, Vec2 y);

// Rectangular block of cells of the level-`level` grid of a window.
struct GridBlock {
  std::int64_t col0 = 0, row0 = 0;
  int cols = 0, rows = 0;
};

// 8-connected graph on the cell centers of a block whose sd exceeds the cell
// diagonal. Edge weights are quadratures along the straight segment,
// computed on first use.
class MetricGraph {
 public:
  MetricGraph(const Domain& domain, const Window& window, int level, const GridBlock& block);

  const Domain& domain() const { return *domain_; }
  const Window& window() const { return window_; }
  int level() const { return level_; }
  double h() const { return h_; }
  const GridBlock& block() const { return block_; }
  std::size_t cell_count() const { return sd_.size(); }

  // Block-local cell index for a global (col, row), or -1 outside the block.
  int cell(std::int64_t col, std::int64_t row) const;
  int cell_at(Vec2 p) const;
  std::int64_t col_of(int cell) const { return block_.col0 + cell % block_.cols; }
  std::int64_t row_of(int cell) const { return block_.row0 + cell / block_.cols; }
  Vec2 center(int cell) const;
  double sd(int cell) const { return sd_[cell]; }
  bool is_node(int cell) const { return sd_[cell] > threshold_; }

  // Weight of the edge from `cell` in direction d (0..7, counter-clockwise from +x);
  // infinity when either end is not a node.
  double weight(int cell, int d) const;
  int step(int cell, int d) const;

  // Nodes near p (5x5 cells around it) joined to p by a valid segment, with
  // the segment's qh length.
  std::vector<std::pair<int, double>> connect(Vec2 p) const;

  struct Paths {
    std::vector<double> dist;
    std::vector<int> prev;  // -1 for sources
    int reached = -1;       // target that stopped the search, if any
  };
  // Dijkstra with (distance, index) ordering. `stop(node, dist)` is asked for
  // every settled node and ends the search when it returns true (that node is
  // recorded in `reached`); `allowed` restricts the explored nodes.
  Paths shortest_paths(const std::vector<std::pair<int, double>>& sources,
                       const std::function<bool(int, double)>& stop = {},
                       const std::function<bool(int)>& allowed = {}) const;

  // Size of the 8-connected node component containing `node`.
  std::size_t component_size(int node) const;

 private:
  const Domain* domain_;
  Window window_;
  int level_;
  double h_;
  double threshold_;
  GridBlock block_;
  std::vector<double> sd_;
  mutable std::vector<float> weights_;  // 4 per cell (directions 0..3); NaN = not yet computed
};

struct QhOptions {
  int max_block_cells = 1 << 20;  // larger blocks are coarsened by powers of two
  int refine_start = 16;
  int refine_max = 64;
  double refine_rel = 1e-4;
  double quad_tol = 1e-7;
};

struct QhPath {
  double value = 0.0;      // min of the graph path and the refined curve
  double err = 0.0;        // quadrature error bound of `value`
  double graph_value = 0.0;
  double h = 0.0;          // grid step actually used
  Polyline geodesic;
};

// Window that hosts every grid of a domain: the square around its bounding box.
Window domain_window(const Domain& domain);

// Quasi-hyperbolic distance: Dijkstra on a grid block at `resolution` (finer near
// close or near-boundary pairs), then polyline refinement of the path.
QhPath qh_distance(const Domain& domain, Vec2 x, Vec2 y, double resolution,
                   const QhOptions& options = {});

// Coordinate-wise golden-section refinement of a valid polyline with fixed
// first point. The last point is fixed unless end_ok is given, in which case
// it may move within {end_ok}.
Polyline refine_polyline(const Domain& domain, Polyline path, const QhOptions& options,
                         const std::function<bool(Vec2)>& end_ok = {});

struct InteriorDistance {
  double value = 0.0;
  double err = 0.0;
  Vec2 attaining;
  Polyline geodesic;
  double radius = 0.0;  // search ball used
};

// k(x, Omega_lambda) with Omega_lambda = {sd >= lambda}; multi-target Dijkstra
// restricted to B_R(x), R = max(lambda * k(x, y0), |x - y0|) for a first-pass y0.
InteriorDistance qh_distance_to_interior(const Domain& domain, Vec2 x, double lambda,
                                         double resolution, const QhOptions& options = {},
                                         bool restrict_to_ball = true);

double eta_lambda(const Domain& domain, Vec2 x, Vec2 y, double lambda, double resolution,
                  const QhOptions& options = {});

// Single-source qh distance at every inside cell (sd(center) >= h sqrt2 / 2) of the
// level grid; NaN elsewhere and at unreachable cells.
std::vector<double> qh_distance_field(const Domain& domain, const Window& window, int level,
                                      Vec2 source);

}  // namespace geobmo
