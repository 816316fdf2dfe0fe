#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "geobmo/domain.hpp"

namespace geobmo::testing {

// Distance to a parametrised boundary piece by dense sampling and ternary
// refinement around the best sample.
inline double sampled_curve_distance(Vec2 p, const std::function<Vec2(double)>& curve,
                                     int samples = 4000) {
  int best = 0;
  double best_d = distance(p, curve(0.0));
  for (int k = 1; k <= samples; ++k) {
    const double d = distance(p, curve(static_cast<double>(k) / samples));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  double a = std::max(0.0, (best - 1.0) / samples), b = std::min(1.0, (best + 1.0) / samples);
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (distance(p, curve(m1)) < distance(p, curve(m2))) b = m2;
    else a = m1;
  }
  return std::min(best_d, distance(p, curve((a + b) / 2)));
}

inline std::function<Vec2(double)> segment_curve(Vec2 a, Vec2 b) {
  return [a, b](double t) { return lerp(a, b, t); };
}

inline Vec2 random_point(std::mt19937_64& rng, const Box& b) {
  std::uniform_real_distribution<double> ux(b.lo.x, b.hi.x), uy(b.lo.y, b.hi.y);
  const double x = ux(rng);
  return {x, uy(rng)};
}

}  // namespace geobmo::testing

#include <algorithm>
#include <tuple>

#include "geobmo/dyadic.hpp"

namespace geobmo::testing {

// Level-by-level sweep over every dyadic cell of the window: a cell is a Whitney
// cube iff it meets the acceptance rule and no coarser cell containing it does.
struct OracleCube {
  int level;
  std::int64_t i, j;
  bool in_omega;
  auto operator<=>(const OracleCube&) const = default;
};

inline std::vector<OracleCube> exhaustive_whitney(const Domain& d, const Window& w, int depth) {
  std::vector<OracleCube> out;
  std::vector<char> covered{0};  // coarser-level coverage, (2^l)^2 flags
  for (int l = 0; l <= depth; ++l) {
    const std::int64_t n = std::int64_t{1} << l;
    const double side = w.side / static_cast<double>(n);
    std::vector<char> here(static_cast<std::size_t>(n * n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        if (l > 0 && covered[static_cast<std::size_t>((i / 2) * (n / 2) + j / 2)]) {
          here[static_cast<std::size_t>(i * n + j)] = 1;
          continue;
        }
        const Vec2 lo{w.origin.x + i * side, w.origin.y + j * side};
        const Vec2 c = lo + Vec2{side / 2, side / 2};
        const double s = d.signed_distance(c);
        if (std::abs(s) < 1.5 * std::sqrt(2.0) * side) continue;
        if (l == 0) {
          double m = std::abs(s);
          for (const Vec2 k : {lo, lo + Vec2{side, 0}, lo + Vec2{0, side}, lo + Vec2{side, side}})
            m = std::min(m, std::abs(d.signed_distance(k)));
          if (m > 4 * std::sqrt(2.0) * side) continue;
        }
        here[static_cast<std::size_t>(i * n + j)] = 1;
        out.push_back({l, i, j, s > 0});
      }
    }
    covered = std::move(here);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace geobmo::testing
