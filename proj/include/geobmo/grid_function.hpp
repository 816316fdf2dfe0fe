#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "geobmo/domain.hpp"
#include "geobmo/dyadic.hpp"

namespace geobmo {

class BmoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell classification by sd(center) against the half-diagonal h sqrt2 / 2.
enum class CellMask : std::uint8_t { inside, outside, straddling };

// Values on the level-`level` grid of a window, row-major (index = row * n + col).
// A cell takes part in integrals when it is not straddling and its value is
// finite; outside cells are NaN unless a value is assigned.
class GridFunction {
 public:
  GridFunction(const Window& window, int level);

  // Inside cells get f(center); outside and straddling cells are NaN.
  static GridFunction sample(const Domain& domain, const Window& window, int level,
                             const std::function<double(Vec2)>& f);
  // Mask from the domain, every non-straddling cell gets f(center).
  static GridFunction sample_window(const Domain& domain, const Window& window, int level,
                                    const std::function<double(Vec2)>& f);

  const Window& window() const { return window_; }
  int level() const { return level_; }
  std::int64_t n() const { return n_; }
  double h() const { return h_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(std::int64_t col, std::int64_t row) const {
    return static_cast<std::size_t>(row * n_ + col);
  }
  Vec2 center(std::int64_t col, std::int64_t row) const;
  double value(std::size_t k) const { return values_[k]; }
  CellMask mask(std::size_t k) const { return mask_[k]; }
  bool counted(std::size_t k) const;
  const std::vector<double>& values() const { return values_; }
  const std::vector<CellMask>& masks() const { return mask_; }

  // Mutation marks the summed-area tables stale.
  void set(std::size_t k, double v);
  void set_mask(std::size_t k, CellMask m);
  void classify(const Domain& domain);  // recompute the mask from sd
  void build_tables();

  std::size_t straddling_count() const;
  double straddling_fraction() const;

  struct Sums {
    long double sum = 0.0L;
    long double abs_sum = 0.0L;
    std::int64_t count = 0;     // counted cells
    std::int64_t excluded = 0;  // straddling cells
  };
  // O(1) sums over the cells of a grid-aligned cube of the same window.
  Sums cube_sums(const DyadicCube& q) const;
  // Cell index range [c0, c1) x [r0, r1) of a cube; throws on a foreign window or
  // a cube finer than the grid.
  struct Range {
    std::int64_t c0, r0, c1, r1;
  };
  Range cells_of(const DyadicCube& q) const;

 private:
  Window window_;
  int level_;
  std::int64_t n_;
  double h_;
  std::vector<double> values_;
  std::vector<CellMask> mask_;
  bool tables_ok_ = false;
  // (n + 1)^2 prefix tables.
  std::vector<long double> sat_sum_, sat_abs_;
  std::vector<std::int64_t> sat_count_, sat_excl_;
};

}  // namespace geobmo
