#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "geobmo/domain.hpp"
#include "geobmo/dyadic.hpp"

namespace geobmo {

// E cubes tile Omega, E' cubes tile the interior of the complement.
enum class CubeTag { E, E_prime };

const char* to_string(CubeTag tag);

struct WhitneyCube {
  DyadicCube cube;
  CubeTag tag = CubeTag::E;
  // Bracket for dist(Q, boundary).
  double dist_lo = 0.0;
  double dist_hi = 0.0;
};

class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(const std::string& what, DyadicCube cube)
      : std::runtime_error(what), cube_(cube) {}
  const DyadicCube& cube() const { return cube_; }

 private:
  DyadicCube cube_;
};

class WhitneyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Extremes of dist/side over the built cubes, for reporting.
struct WhitneyStats {
  double min_lo_ratio = 0.0;
  double max_hi_ratio = 0.0;
  double min_neighbor_ratio = 1.0;
  double max_neighbor_ratio = 1.0;
  std::size_t max_neighbors = 0;
};

class WhitneyDecomposition {
 public:
  WhitneyDecomposition(Window window, int max_depth, std::vector<WhitneyCube> cubes,
                       std::vector<DyadicCube> frontier);

  const Window& window() const { return window_; }
  int max_depth() const { return max_depth_; }
  // Sorted by (level, i, j).
  const std::vector<WhitneyCube>& cubes() const { return cubes_; }
  const WhitneyCube& operator[](int idx) const { return cubes_[idx]; }
  std::size_t size() const { return cubes_.size(); }
  const std::vector<DyadicCube>& frontier() const { return frontier_; }
  double frontier_fraction() const;

  // Index of the cube with this key, or -1.
  int find(const CubeKey& key) const;
  int find(const DyadicCube& q) const;
  // Cube containing p (any tag), or -1 when p is in a frontier cell or outside.
  int locate(Vec2 p) const;
  // Cubes whose closed boxes meet cube idx, in index order.
  const std::vector<int>& neighbors(int idx) const { return adjacency_[idx]; }
  std::vector<int> neighbors(const DyadicCube& q) const;
  // Cubes whose closed boxes meet an arbitrary cube of the window (e.g. a frontier cell).
  std::vector<int> touching(const DyadicCube& q) const;
  // Indices of cubes with this tag at this level (sorted).
  const std::vector<int>& at_level(CubeTag tag, int level) const;
  std::size_t count(CubeTag tag) const;

  const WhitneyStats& stats() const { return stats_; }

  // Checks WC1, WC2 (bracket tolerance 1e-9 W) and WC3; throws InvariantViolation.
  void check_invariants() const;

 private:
  std::vector<int> scan_neighbors(const DyadicCube& q, int min_level, int max_level) const;

  Window window_;
  int max_depth_;
  std::vector<WhitneyCube> cubes_;
  std::vector<DyadicCube> frontier_;
  std::unordered_map<CubeKey, int, CubeKeyHash> index_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<std::vector<int>> by_level_[2];
  mutable WhitneyStats stats_;
};

// Acceptance rule: E when sd(c) >= 1.5 sqrt(n) l, E' when -sd(c) >= 1.5 sqrt(n) l.
WhitneyDecomposition build_whitney(const Domain& domain, const Window& window, int max_depth);
inline WhitneyDecomposition build_whitney(const Domain& domain, int max_depth) {
  return build_whitney(domain, Window::from_box(domain.bounding_box()), max_depth);
}

// [max(0, |sd(c)| - sqrt(n)/2 l), min over corners and center of |sd|].
std::pair<double, double> distance_bracket(const Domain& domain, const DyadicCube& q);

// C = 5 sqrt(n) + 8 n / eps^2.
double matching_constant(double epsilon, int n = kDim);

struct MatchResult {
  int index = -1;  // into the decomposition, -1 when no match
  double distance = 0.0;
  double search_radius = 0.0;
  bool found() const { return index >= 0; }
};

// Nearest E cube with side ratio in [1, 4] and dist <= C l(Q); ties by level then coords.
MatchResult matching_cube(const WhitneyDecomposition& dec, const DyadicCube& q, double epsilon,
                          double delta);

struct InteriorPointResult {
  bool found = false;
  Vec2 point;
  double best_sd = 0.0;  // best sampled value, whether or not it qualifies
  double required = 0.0;
};

// Samples the center, the annulus l/8..l/4 about it and an interior grid of Q.
InteriorPointResult find_interior_point(const Domain& domain, const DyadicCube& q, double epsilon);

struct BigCubeResult {
  int index = -1;
  double distance = 0.0;
  double min_side = 0.0;
  double radius = 0.0;
  bool found() const { return index >= 0; }
};

// Nearest E cube with side >= eps delta / (320 n) at distance < delta (1/eps + sqrt n).
BigCubeResult find_big_cube_near(const WhitneyDecomposition& dec, Vec2 x, double epsilon,
                                 double delta);

// Shortest hop path between the E cubes containing x and y.
std::vector<int> whitney_chain(const WhitneyDecomposition& dec, Vec2 x, Vec2 y);

}  // namespace geobmo
