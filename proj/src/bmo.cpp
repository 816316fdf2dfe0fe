#include "geobmo/bmo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "geobmo/parallel.hpp"

namespace geobmo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(const GridFunction::Sums& s) {
  return static_cast<double>(s.sum) / static_cast<double>(s.count);
}

double oscillation_with(const GridFunction& f, const DyadicCube& q, double avg) {
  const auto r = f.cells_of(q);
  long double acc = 0.0L;
  std::int64_t count = 0;
  for (std::int64_t row = r.r0; row < r.r1; ++row)
    for (std::int64_t col = r.c0; col < r.c1; ++col) {
      const std::size_t k = f.index(col, row);
      if (!f.counted(k)) continue;
      acc += std::abs(f.value(k) - avg);
      ++count;
    }
  return count ? static_cast<double>(acc / count) : 0.0;
}

struct LevelBest {
  double osc = -1.0;
  DyadicCube osc_cube;
  double absmean = -1.0;
  DyadicCube abs_cube;
  std::int64_t cubes = 0;
};

using Admit = std::function<bool(const DyadicCube&)>;

// Oscillation sup over cubes with side < lambda (every cube when osc_everywhere)
// and mean-|f| sup over cubes with side >= lambda.
NormReport sweep(const GridFunction& f, const Admit& admit, double lambda, bool osc_everywhere) {
  const int g = f.level();
  const Window& w = f.window();
  const std::int64_t cells = static_cast<std::int64_t>(f.size());
  auto needs_osc = [&](int level) {
    if (level >= g) return false;  // single cells do not oscillate
    return osc_everywhere || std::ldexp(w.side, -level) < lambda;
  };

  std::vector<char> osc_on(g + 1, 0);
  std::vector<int> osc_levels;
  for (int l = 0; l <= g; ++l)
    if (needs_osc(l)) osc_levels.push_back(l);
  NormReport rep;
  rep.lambda = lambda;
  std::size_t stride = 1;
  while (static_cast<std::int64_t>((osc_levels.size() + stride - 1) / stride) * cells > kSweepCap)
    ++stride;
  if (stride > 1) rep.subsampled = true;
  for (std::size_t t = 0; t < osc_levels.size(); t += stride) osc_on[osc_levels[t]] = 1;

  std::vector<LevelBest> best(g + 1);
  parallel_for(static_cast<std::size_t>(g + 1), [&](std::size_t lv) {
    const int level = static_cast<int>(lv);
    const double side = std::ldexp(w.side, -level);
    const bool large = side >= lambda;
    const bool osc = osc_on[level] != 0;
    if (!large && !osc && !needs_osc(level)) return;
    LevelBest& b = best[lv];
    const std::int64_t m = std::int64_t{1} << level;
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) {
        const DyadicCube q(w, level, i, j);
        if (admit && !admit(q)) continue;
        const auto s = f.cube_sums(q);
        if (s.count == 0) continue;
        ++b.cubes;
        const double avg = mean_of(s);
        if (osc) {
          const double o = oscillation_with(f, q, avg);
          if (o > b.osc) {
            b.osc = o;
            b.osc_cube = q;
          }
        } else if (needs_osc(level) && b.osc < 0.0) {
          b.osc = 0.0;  // level cell-sized or skipped; keep the level visible
          b.osc_cube = q;
        }
        if (large) {
          const double a = static_cast<double>(s.abs_sum) / static_cast<double>(s.count);
          if (a > b.absmean) {
            b.absmean = a;
            b.abs_cube = q;
          }
        }
      }
  });

  bool any_large = false;
  for (const auto& b : best) {
    rep.cubes += b.cubes;
    if (b.osc >= 0.0 && (!rep.small_cube || b.osc > rep.small_scale_part)) {
      rep.small_scale_part = b.osc;
      rep.small_cube = b.osc_cube;
    }
    if (b.absmean >= 0.0) {
      if (!any_large || b.absmean > rep.large_scale_part) {
        rep.large_scale_part = b.absmean;
        rep.large_cube = b.abs_cube;
      }
      any_large = true;
    }
  }
  rep.degenerate = std::isfinite(lambda) && !any_large;
  rep.value = rep.small_scale_part + rep.large_scale_part;
  rep.attaining_cube =
      rep.large_scale_part > rep.small_scale_part ? rep.large_cube : rep.small_cube;
  rep.excluded_fraction = f.straddling_fraction();
  return rep;
}

Admit in_domain(const Domain& d) {
  return [&d](const DyadicCube& q) { return cube_in_domain(d, q); };
}

// sup of |f_Q1 - f_Q2| over equal-size dyadic cubes with touching closed boxes.
double adjacent_pair_sup(const GridFunction& f) {
  const int g = f.level();
  std::vector<double> per_level(g + 1, 0.0);
  parallel_for(static_cast<std::size_t>(g + 1), [&](std::size_t lv) {
    const int level = static_cast<int>(lv);
    const std::int64_t m = std::int64_t{1} << level;
    std::vector<double> avg(static_cast<std::size_t>(m * m), kNaN);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) {
        const auto s = f.cube_sums(DyadicCube(f.window(), level, i, j));
        if (s.count) avg[static_cast<std::size_t>(j * m + i)] = mean_of(s);
      }
    double best = 0.0;
    constexpr int kDirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) {
        const double a = avg[static_cast<std::size_t>(j * m + i)];
        if (std::isnan(a)) continue;
        for (const auto& d : kDirs) {
          const std::int64_t i2 = i + d[0], j2 = j + d[1];
          if (i2 < 0 || j2 < 0 || i2 >= m || j2 >= m) continue;
          const double b = avg[static_cast<std::size_t>(j2 * m + i2)];
          if (!std::isnan(b)) best = std::max(best, std::abs(a - b));
        }
      }
    per_level[lv] = best;
  });
  return *std::max_element(per_level.begin(), per_level.end());
}

std::vector<double> e_cube_averages(const GridFunction& f, const WhitneyDecomposition& dec) {
  if (!(dec.window() == f.window())) throw BmoError("decomposition and grid use different windows");
  if (dec.max_depth() > f.level()) throw BmoError("grid coarser than the decomposition");
  std::vector<double> avg(dec.size(), kNaN);
  parallel_for(dec.size(), [&](std::size_t k) {
    if (dec[static_cast<int>(k)].tag != CubeTag::E) return;
    const auto s = f.cube_sums(dec[static_cast<int>(k)].cube);
    if (s.count) avg[k] = mean_of(s);
  });
  return avg;
}

GridFunction from_field(const Domain& domain, const Window& w, int level,
                        const std::vector<double>& values) {
  GridFunction g(w, level);
  g.classify(domain);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.mask(k) != CellMask::inside) continue;
    if (std::isfinite(values[k])) g.set(k, values[k]);
    else g.set_mask(k, CellMask::straddling);  // unreachable at this resolution
  }
  g.build_tables();
  return g;
}

}  // namespace

double cube_average(const GridFunction& f, const DyadicCube& q) {
  const auto s = f.cube_sums(q);
  if (s.count == 0) throw BmoError("cube " + to_string(q) + " has no inside cells");
  return mean_of(s);
}

double cube_oscillation(const GridFunction& f, const DyadicCube& q) {
  return oscillation_with(f, q, cube_average(f, q));
}

NormReport bmo_lambda_norm(const GridFunction& f, const Domain& domain, double lambda) {
  if (!(lambda > 0.0)) throw BmoError("lambda must be positive");
  return sweep(f, in_domain(domain), lambda, false);
}

NormReport bmo_homogeneous_norm(const GridFunction& f, const Domain& domain) {
  auto rep = sweep(f, in_domain(domain), kInf, true);
  rep.degenerate = false;
  return rep;
}

NormReport bmo_window_norm(const GridFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw BmoError("lambda must be positive");
  return sweep(f, {}, lambda, false);
}

NormReport bmo_rn_abc(const GridFunction& f, double lambda) {
  auto rep = bmo_window_norm(f, lambda);
  const auto ac = sweep(f, {}, lambda / (16 * std::sqrt(static_cast<double>(kDim))), true);
  rep.abc = NormReport::Abc{ac.small_scale_part, adjacent_pair_sup(f), ac.large_scale_part};
  rep.subsampled = rep.subsampled || ac.subsampled;
  return rep;
}

GridFunction gen_qh_function(const Domain& domain, Vec2 a, double resolution) {
  const Window w = domain_window(domain);
  return gen_qh_function(domain, w, level_for_resolution(w, resolution), a);
}

GridFunction gen_qh_function(const Domain& domain, const Window& w, int level, Vec2 a) {
  return from_field(domain, w, level, qh_distance_field(domain, w, level, a));
}

GridFunction gen_dipole(const Domain& domain, Vec2 z1, Vec2 z2, double r1, double r2,
                        double resolution) {
  const Window w = domain_window(domain);
  return gen_dipole(domain, w, level_for_resolution(w, resolution), z1, z2, r1, r2);
}

GridFunction gen_dipole(const Domain& domain, const Window& w, int level, Vec2 z1, Vec2 z2,
                        double r1, double r2) {
  if (r1 < 0.0 || r2 < 0.0) throw BmoError("dipole radii must be nonnegative");
  const auto k1 = qh_distance_field(domain, w, level, z1);
  const auto k2 = qh_distance_field(domain, w, level, z2);
  std::vector<double> v(k1.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::max(r1 - k1[i], 0.0) - std::max(r2 - k2[i], 0.0);
  return from_field(domain, w, level, v);
}

GridFunction gen_cellwise_random(const Domain& domain, const WhitneyDecomposition& dec, int level,
                                 std::uint64_t seed) {
  if (level < dec.max_depth()) throw BmoError("grid coarser than the decomposition");
  std::vector<int> e_cubes;
  for (std::size_t k = 0; k < dec.size(); ++k)
    if (dec[static_cast<int>(k)].tag == CubeTag::E) e_cubes.push_back(static_cast<int>(k));
  if (e_cubes.empty()) throw BmoError("decomposition has no E cubes");

  std::mt19937_64 rng(seed);
  const int root = e_cubes[std::uniform_int_distribution<std::size_t>(0, e_cubes.size() - 1)(rng)];
  std::vector<int> hops(dec.size(), -1);
  std::deque<int> queue{root};
  hops[root] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const int v : dec.neighbors(u))
      if (dec[v].tag == CubeTag::E && hops[v] < 0) {
        hops[v] = hops[u] + 1;
        queue.push_back(v);
      }
  }
  std::uniform_int_distribution<int> unit(-1024, 1024);
  std::vector<double> cube_value(dec.size(), kNaN);
  for (const int k : e_cubes) {
    const double u = unit(rng) / 1024.0;
    if (hops[k] >= 0) cube_value[k] = hops[k] / 2.0 + u / 4.0;
  }

  GridFunction g(dec.window(), level);
  g.classify(domain);
  parallel_for(g.size(), [&](std::size_t k) {
    if (g.mask(k) != CellMask::inside) return;
    const std::int64_t n = g.n();
    const Vec2 c = g.center(static_cast<std::int64_t>(k) % n, static_cast<std::int64_t>(k) / n);
    int idx = dec.locate(c);
    if (idx < 0 || dec[idx].tag != CubeTag::E) {
      idx = -1;
      if (const auto cell = cube_containing(dec.window(), dec.max_depth(), c))
        for (const int m : dec.touching(*cell))
          if (dec[m].tag == CubeTag::E && std::isfinite(cube_value[m])) {
            idx = m;
            break;
          }
    }
    if (idx >= 0 && std::isfinite(cube_value[idx])) g.set(k, cube_value[idx]);
    else g.set_mask(k, CellMask::straddling);
  });
  g.build_tables();
  return g;
}

double check_log_growth(const GridFunction& f, const WhitneyDecomposition& dec, double lambda) {
  if (!(lambda > 0.0)) throw BmoError("lambda must be positive");
  const auto avg = e_cube_averages(f, dec);
  double best = 0.0;
  for (std::size_t k = 0; k < avg.size(); ++k) {
    if (std::isnan(avg[k])) continue;
    const double l = dec[static_cast<int>(k)].cube.side();
    best = std::max(best, std::abs(avg[k]) / (1.0 + std::max(0.0, std::log(lambda / l))));
  }
  return best;
}

double check_adjacent_averages(const GridFunction& f, const WhitneyDecomposition& dec) {
  const auto avg = e_cube_averages(f, dec);
  double best = 0.0;
  for (std::size_t k = 0; k < avg.size(); ++k) {
    if (std::isnan(avg[k])) continue;
    for (const int m : dec.neighbors(static_cast<int>(k)))
      if (static_cast<std::size_t>(m) > k && !std::isnan(avg[m]))
        best = std::max(best, std::abs(avg[k] - avg[m]));
  }
  return best;
}

}  // namespace geobmo
