#include "geobmo/grid_function.hpp"

#include <cmath>
#include <limits>

#include "geobmo/parallel.hpp"

namespace geobmo {

namespace {
constexpr int kMaxGridLevel = 12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

GridFunction::GridFunction(const Window& window, int level)
    : window_(window), level_(level) {
  if (level < 0 || level > kMaxGridLevel)
    throw BmoError("grid level " + std::to_string(level) + " outside 0.." +
                   std::to_string(kMaxGridLevel));
  n_ = std::int64_t{1} << level;
  h_ = std::ldexp(window.side, -level);
  values_.assign(static_cast<std::size_t>(n_ * n_), kNaN);
  mask_.assign(values_.size(), CellMask::outside);
}

GridFunction GridFunction::sample(const Domain& domain, const Window& window, int level,
                                  const std::function<double(Vec2)>& f) {
  GridFunction g(window, level);
  g.classify(domain);
  parallel_for(static_cast<std::size_t>(g.n_), [&](std::size_t row) {
    for (std::int64_t col = 0; col < g.n_; ++col) {
      const std::size_t k = g.index(col, static_cast<std::int64_t>(row));
      if (g.mask_[k] == CellMask::inside) g.values_[k] = f(g.center(col, static_cast<std::int64_t>(row)));
    }
  });
  g.build_tables();
  return g;
}

GridFunction GridFunction::sample_window(const Domain& domain, const Window& window, int level,
                                         const std::function<double(Vec2)>& f) {
  GridFunction g(window, level);
  g.classify(domain);
  parallel_for(static_cast<std::size_t>(g.n_), [&](std::size_t row) {
    for (std::int64_t col = 0; col < g.n_; ++col) {
      const std::size_t k = g.index(col, static_cast<std::int64_t>(row));
      if (g.mask_[k] != CellMask::straddling)
        g.values_[k] = f(g.center(col, static_cast<std::int64_t>(row)));
    }
  });
  g.build_tables();
  return g;
}

Vec2 GridFunction::center(std::int64_t col, std::int64_t row) const {
  return window_.origin + Vec2{(col + 0.5) * h_, (row + 0.5) * h_};
}

bool GridFunction::counted(std::size_t k) const {
  return mask_[k] != CellMask::straddling && std::isfinite(values_[k]);
}

void GridFunction::set(std::size_t k, double v) {
  values_[k] = v;
  tables_ok_ = false;
}

void GridFunction::set_mask(std::size_t k, CellMask m) {
  mask_[k] = m;
  tables_ok_ = false;
}

void GridFunction::classify(const Domain& domain) {
  const double half = h_ * std::sqrt(2.0) / 2;
  parallel_for(static_cast<std::size_t>(n_), [&](std::size_t row) {
    for (std::int64_t col = 0; col < n_; ++col) {
      const double s = domain.signed_distance(center(col, static_cast<std::int64_t>(row)));
      const std::size_t k = index(col, static_cast<std::int64_t>(row));
      mask_[k] = s >= half ? CellMask::inside : s <= -half ? CellMask::outside : CellMask::straddling;
    }
  });
  tables_ok_ = false;
}

void GridFunction::build_tables() {
  const std::size_t w = static_cast<std::size_t>(n_ + 1);
  sat_sum_.assign(w * w, 0.0L);
  sat_abs_.assign(w * w, 0.0L);
  sat_count_.assign(w * w, 0);
  sat_excl_.assign(w * w, 0);
  for (std::int64_t r = 0; r < n_; ++r) {
    long double row_sum = 0.0L, row_abs = 0.0L;
    std::int64_t row_count = 0, row_excl = 0;
    for (std::int64_t c = 0; c < n_; ++c) {
      const std::size_t k = index(c, r);
      if (counted(k)) {
        row_sum += values_[k];
        row_abs += std::abs(values_[k]);
        ++row_count;
      }
      if (mask_[k] == CellMask::straddling) ++row_excl;
      const std::size_t t = static_cast<std::size_t>(r + 1) * w + static_cast<std::size_t>(c + 1);
      const std::size_t above = t - w;
      sat_sum_[t] = sat_sum_[above] + row_sum;
      sat_abs_[t] = sat_abs_[above] + row_abs;
      sat_count_[t] = sat_count_[above] + row_count;
      sat_excl_[t] = sat_excl_[above] + row_excl;
    }
  }
  tables_ok_ = true;
}

std::size_t GridFunction::straddling_count() const {
  std::size_t s = 0;
  for (const auto m : mask_) s += m == CellMask::straddling;
  return s;
}

double GridFunction::straddling_fraction() const {
  return static_cast<double>(straddling_count()) / static_cast<double>(mask_.size());
}

GridFunction::Range GridFunction::cells_of(const DyadicCube& q) const {
  if (!(q.window == window_)) throw BmoError("cube belongs to another window");
  if (q.level > level_) throw BmoError("cube finer than the grid");
  const int shift = level_ - q.level;
  return {q.i << shift, q.j << shift, (q.i + 1) << shift, (q.j + 1) << shift};
}

GridFunction::Sums GridFunction::cube_sums(const DyadicCube& q) const {
  if (!tables_ok_) throw BmoError("summed-area tables are stale; call build_tables()");
  const Range r = cells_of(q);
  const std::size_t w = static_cast<std::size_t>(n_ + 1);
  auto at = [&](std::int64_t c, std::int64_t rr) {
    return static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(c);
  };
  const std::size_t a = at(r.c1, r.r1), b = at(r.c0, r.r1), c = at(r.c1, r.r0), d = at(r.c0, r.r0);
  Sums s;
  s.sum = sat_sum_[a] - sat_sum_[b] - sat_sum_[c] + sat_sum_[d];
  s.abs_sum = sat_abs_[a] - sat_abs_[b] - sat_abs_[c] + sat_abs_[d];
  s.count = sat_count_[a] - sat_count_[b] - sat_count_[c] + sat_count_[d];
  s.excluded = sat_excl_[a] - sat_excl_[b] - sat_excl_[c] + sat_excl_[d];
  return s;
}

}  // namespace geobmo
