#include "geobmo/extension.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "geobmo/parallel.hpp"

namespace geobmo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool on_window_edge(const DyadicCube& q) {
  const std::int64_t m = std::int64_t{1} << q.level;
  return q.i == 0 || q.j == 0 || q.i + 1 == m || q.j + 1 == m;
}

// Nearest E cube by box distance; ties go to the larger cube, then index order.
int nearest_e_cube(const WhitneyDecomposition& dec, const std::vector<int>& e_cubes,
                   const DyadicCube& q, double* distance) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const int idx : e_cubes) {
    const double d = box_distance(dec[idx].cube.box(), q.box());
    if (d < best_d || (d == best_d && dec[idx].cube.level < dec[best].cube.level)) {
      best = idx;
      best_d = d;
    }
  }
  *distance = best_d;
  return best;
}

// 8-neighbour multi-source BFS from every finite cell into the NaN cells.
std::size_t fill_nearest(GridFunction& g, std::vector<std::uint8_t>& filled) {
  const std::int64_t n = g.n();
  std::deque<std::size_t> queue;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (std::isfinite(g.value(k))) queue.push_back(k);
  std::size_t count = 0;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    const std::int64_t col = static_cast<std::int64_t>(k) % n, row = static_cast<std::int64_t>(k) / n;
    for (std::int64_t dr = -1; dr <= 1; ++dr)
      for (std::int64_t dc = -1; dc <= 1; ++dc) {
        const std::int64_t c = col + dc, r = row + dr;
        if (c < 0 || r < 0 || c >= n || r >= n) continue;
        const std::size_t m = g.index(c, r);
        if (std::isfinite(g.value(m))) continue;
        g.set(m, g.value(k));
        filled[m] = 1;
        ++count;
        queue.push_back(m);
      }
  }
  return count;
}

}  // namespace

double lambda_max(double epsilon, double delta, int n) {
  if (!(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta <= 1.0) || n < 1)
    throw std::invalid_argument("lambda_max needs 0 < eps, delta <= 1 and n >= 1");
  const double rn = std::sqrt(static_cast<double>(n));
  return epsilon * epsilon * delta / (320.0 * n * (1.0 + rn * epsilon));
}

ExtensionResult extend(const GridFunction& f, const Domain& domain, const WhitneyDecomposition& dec,
                       double lambda, double epsilon, double delta,
                       const ExtensionOptions& options) {
  if (!(lambda > 0.0)) throw BmoError("lambda must be positive");
  if (!(dec.window() == f.window())) throw BmoError("decomposition and grid use different windows");
  if (dec.max_depth() > f.level()) throw BmoError("grid coarser than the decomposition");

  ExtensionResult res{GridFunction(f.window(), f.level()), {}, {}, {}};
  res.lambda = lambda;
  res.lambda_max = lambda_max(std::min(epsilon, 1.0), std::min(delta, 1.0));
  res.above_lambda_max = lambda > res.lambda_max;

  std::vector<int> required, e_cubes;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    const auto& c = dec[static_cast<int>(k)];
    if (c.tag == CubeTag::E) e_cubes.push_back(static_cast<int>(k));
    else if (c.cube.side() <= lambda) required.push_back(static_cast<int>(k));
    else res.zero_region.push_back(static_cast<int>(k));
  }

  const double match_limit = epsilon * delta / (16 * kDim) * (1 + 1e-12);
  enum class Outcome : std::uint8_t { matched, fallback, edge, failed };
  std::vector<Assignment> slots(required.size());
  std::vector<Outcome> outcome(required.size(), Outcome::failed);
  parallel_for(required.size(), [&](std::size_t t) {
    const DyadicCube& q = dec[required[t]].cube;
    Assignment& a = slots[t];
    a.cube = required[t];
    if (q.side() <= match_limit) {
      const auto m = matching_cube(dec, q, epsilon, delta);
      if (m.found()) {
        a.source = m.index;
        a.distance = m.distance;
        outcome[t] = Outcome::matched;
      }
    }
    if (a.source < 0 && options.best_effort && !e_cubes.empty()) {
      a.source = nearest_e_cube(dec, e_cubes, q, &a.distance);
      a.fallback = true;
      outcome[t] = Outcome::fallback;
    }
    if (a.source >= 0) {
      const auto s = f.cube_sums(dec[a.source].cube);
      if (s.count == 0) throw BmoError("matched cube " + to_string(dec[a.source].cube) + " has no counted cells");
      a.value = static_cast<double>(s.sum) / static_cast<double>(s.count);
    } else if (on_window_edge(q)) {
      outcome[t] = Outcome::edge;
    }
  });

  std::vector<DyadicCube> failed;
  for (std::size_t t = 0; t < required.size(); ++t) {
    switch (outcome[t]) {
      case Outcome::failed:
        failed.push_back(dec[required[t]].cube);
        break;
      case Outcome::edge:
        res.zero_region.push_back(required[t]);
        ++res.edge_zeroed;
        break;
      case Outcome::fallback:
        ++res.fallback_count;
        [[fallthrough]];
      case Outcome::matched:
        res.assignment.push_back(slots[t]);
        break;
    }
  }
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << failed.size() << " E' cube(s) with l(Q) <= lambda have no matching cube (lambda "
        << lambda << " too large for the geometry?), first " << to_string(failed.front());
    throw ExtensionError(msg.str(), std::move(failed));
  }
  std::sort(res.zero_region.begin(), res.zero_region.end());

  GridFunction& g = res.extended;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f.mask(k) == CellMask::inside && std::isfinite(f.value(k))) g.set(k, f.value(k));
  auto paint = [&](int idx, double v) {
    const auto r = g.cells_of(dec[idx].cube);
    for (std::int64_t row = r.r0; row < r.r1; ++row)
      for (std::int64_t col = r.c0; col < r.c1; ++col) {
        const std::size_t k = g.index(col, row);
        if (f.mask(k) != CellMask::inside) g.set(k, v);
      }
  };
  for (const auto& a : res.assignment) paint(a.cube, a.value);
  for (const int idx : res.zero_region) paint(idx, 0.0);

  res.filled.assign(g.size(), 0);
  res.filled_count = fill_nearest(g, res.filled);
  for (std::size_t k = 0; k < g.size(); ++k)
    g.set_mask(k, f.mask(k) == CellMask::inside && !res.filled[k] ? CellMask::inside : CellMask::outside);
  g.build_tables();

  if (options.norms) {
    res.input_norm = bmo_lambda_norm(f, domain, lambda).value;
    res.output_norm = bmo_window_norm(g, lambda).value;
    res.ratio = res.input_norm > 0.0 ? res.output_norm / res.input_norm : kNaN;
  }
  return res;
}

double extension_log_growth(const GridFunction& g, const WhitneyDecomposition& dec, double lambda) {
  if (!(lambda > 0.0)) throw BmoError("lambda must be positive");
  if (!(dec.window() == g.window())) throw BmoError("decomposition and grid use different windows");
  double best = 0.0;
  for (const auto& c : dec.cubes()) {
    const auto s = g.cube_sums(c.cube);
    if (s.count == 0) continue;
    const double avg = static_cast<double>(s.sum) / static_cast<double>(s.count);
    best = std::max(best, std::abs(avg) / (1.0 + std::max(0.0, std::log(lambda / c.cube.side()))));
  }
  return best;
}

std::vector<SuiteFunction> standard_suite(const Domain& domain, const WhitneyDecomposition& dec,
                                          int level, std::size_t count, std::uint64_t seed) {
  const Window& w = dec.window();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  const double min_sd = w.side / 16;
  auto interior_point = [&] {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Vec2 p = w.origin + Vec2{coord(rng) * w.side, coord(rng) * w.side};
      if (domain.signed_distance(p) >= min_sd) return p;
    }
    throw BmoError("no interior point with sd >= side/16 in the window");
  };

  std::vector<SuiteFunction> suite;
  for (std::size_t t = 0; t < count; ++t) {
    std::ostringstream name;
    switch (t % 4) {
      case 0: {
        const double c = (t / 4) % 2 ? -3.0 : 1.0;
        name << "constant:" << c;
        suite.push_back({name.str(), GridFunction::sample(domain, w, level, [c](Vec2) { return c; })});
        break;
      }
      case 1: {
        const Vec2 a = interior_point();
        name << "k:" << a.x << "," << a.y;
        suite.push_back({name.str(), gen_qh_function(domain, w, level, a)});
        break;
      }
      case 2: {
        const Vec2 z1 = interior_point(), z2 = interior_point();
        name << "dipole:" << z1.x << "," << z1.y << ";" << z2.x << "," << z2.y;
        suite.push_back({name.str(), gen_dipole(domain, w, level, z1, z2, 2.0, 1.5)});
        break;
      }
      default: {
        const std::uint64_t s = rng();
        name << "cellwise:" << s;
        suite.push_back({name.str(), gen_cellwise_random(domain, dec, level, s)});
        break;
      }
    }
  }
  return suite;
}

OperatorNormTable operator_norm_experiment(const Domain& domain, const WhitneyDecomposition& dec,
                                           double epsilon, double delta,
                                           const std::vector<double>& lambdas,
                                           const std::vector<SuiteFunction>& suite) {
  if (suite.empty()) throw BmoError("empty function suite");
  OperatorNormTable table;
  table.lambda_max = lambda_max(std::min(epsilon, 1.0), std::min(delta, 1.0));
  for (const double lambda : lambdas) {
    double best = kNaN;
    for (const auto& fn : suite) {
      const auto ext = extend(fn.values, domain, dec, lambda, epsilon, delta);
      OperatorNormRow row;
      row.lambda = lambda;
      row.window_side = dec.window().side;
      row.function = fn.name;
      row.h = fn.values.h();
      row.input_norm = ext.input_norm;
      row.output_norm = ext.output_norm;
      row.ratio = ext.ratio;
      row.filled = ext.filled_count;
      if (std::isfinite(row.ratio) && !(row.ratio <= best)) best = row.ratio;
      table.rows.push_back(row);
    }
    table.max_ratio.push_back(best);
  }
  return table;
}

OperatorNormTable operator_norm_experiment(const Domain& domain, double epsilon, double delta,
                                           const std::vector<double>& lambdas,
                                           const LocalWindowConfig& config) {
  if (config.suite_size == 0) throw BmoError("empty function suite");
  OperatorNormTable table;
  table.lambda_max = lambda_max(std::min(epsilon, 1.0), std::min(delta, 1.0));
  for (const double lambda : lambdas) {
    const double side = config.span * lambda;
    const Window w{config.center - Vec2{side / 2, side / 2}, side};
    const auto dec = build_whitney(domain, w, config.level);
    const auto suite = standard_suite(domain, dec, config.level, config.suite_size, config.seed);
    auto part = operator_norm_experiment(domain, dec, epsilon, delta, {lambda}, suite);
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
    table.max_ratio.push_back(part.max_ratio.front());
  }
  return table;
}

std::vector<CounterexampleRow> counterexample_experiment(
    const std::vector<double>& window_sizes, double lambda, double resolution, double epsilon,
    double delta, const std::function<double(Vec2)>& f) {
  std::vector<CounterexampleRow> rows;
  for (const double size : window_sizes) {
    const Domain domain = make_domain(shapes::IntroLipschitz{size});
    const Window w{{-size / 2, -size / 2}, size};
    const int level = level_for_resolution(w, resolution);
    const auto dec = build_whitney(domain, w, level);
    const auto g = GridFunction::sample(domain, w, level, f);
    ExtensionOptions opt;
    opt.best_effort = true;
    const auto ext = extend(g, domain, dec, lambda, epsilon, delta, opt);
    CounterexampleRow row;
    row.window_size = size;
    row.lambda = lambda;
    row.h = g.h();
    row.input_norm = ext.input_norm;
    row.output_norm = ext.output_norm;
    row.ratio = ext.ratio;
    row.fallback_cubes = ext.fallback_count;
    row.filled = ext.filled_count;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace geobmo
