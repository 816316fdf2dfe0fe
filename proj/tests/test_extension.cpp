#include <cmath>
#include <random>

#include "doctest.h"
#include "geobmo/extension.hpp"
#include "geobmo/qhyper.hpp"

using namespace geobmo;

namespace {

const Domain& disk() {
  static const Domain d = make_domain(shapes::Disk{1.0});
  return d;
}

const Vec2 kRim{std::sqrt(0.5), std::sqrt(0.5)};

// Window of side span * lambda centred on the rim of the unit disk.
Window rim_window(double lambda, double span = 32.0) {
  const double side = span * lambda;
  return {kRim - Vec2{side / 2, side / 2}, side};
}

GridFunction random_dyadic(const Domain& d, const Window& w, int level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-4096, 4096);
  auto g = GridFunction::sample(d, w, level, [](Vec2) { return 0.0; });
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.mask(k) == CellMask::inside) g.set(k, u(rng) / 1024.0);
  g.build_tables();
  return g;
}

// Brute-force window norm over cell lists: no prefix tables.
double direct_window_norm(const GridFunction& g, double lambda) {
  double small = 0.0, large = 0.0;
  const Window& w = g.window();
  for (int level = 0; level <= g.level(); ++level) {
    const std::int64_t m = std::int64_t{1} << level;
    const double side = std::ldexp(w.side, -level);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) {
        std::vector<double> v;
        const std::int64_t s = std::int64_t{1} << (g.level() - level);
        for (std::int64_t r = j * s; r < (j + 1) * s; ++r)
          for (std::int64_t c = i * s; c < (i + 1) * s; ++c) {
            const std::size_t k = g.index(c, r);
            if (g.counted(k)) v.push_back(g.value(k));
          }
        if (v.empty()) continue;
        double mean = 0.0, absmean = 0.0;
        for (const double x : v) mean += x, absmean += std::abs(x);
        mean /= static_cast<double>(v.size());
        absmean /= static_cast<double>(v.size());
        if (side >= lambda) {
          large = std::max(large, absmean);
        } else if (level < g.level()) {
          double dev = 0.0;
          for (const double x : v) dev += std::abs(x - mean);
          small = std::max(small, dev / static_cast<double>(v.size()));
        }
      }
  }
  return small + large;
}

void check_structure(const GridFunction& f, const WhitneyDecomposition& dec,
                     const ExtensionResult& ext, double lambda) {
  const auto& g = ext.extended;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f.mask(k) == CellMask::inside) CHECK(g.value(k) == f.value(k));
    CHECK(std::isfinite(g.value(k)));
    if (ext.filled[k]) CHECK(f.mask(k) != CellMask::inside);
  }
  std::vector<double> value(dec.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& a : ext.assignment) value[a.cube] = a.value;
  for (const int idx : ext.zero_region) value[idx] = 0.0;
  for (std::size_t idx = 0; idx < dec.size(); ++idx) {
    const auto& c = dec[static_cast<int>(idx)];
    if (c.tag != CubeTag::E_prime) continue;
    REQUIRE(std::isfinite(value[idx]));
    if (c.cube.side() > lambda) CHECK(value[idx] == 0.0);
    const auto r = g.cells_of(c.cube);
    for (std::int64_t row = r.r0; row < r.r1; ++row)
      for (std::int64_t col = r.c0; col < r.c1; ++col)
        CHECK(g.value(g.index(col, row)) == value[idx]);
  }
}

}  // namespace

TEST_CASE("lambda max formula") {
  CHECK(lambda_max(0.5, 1.0) == doctest::Approx(2.288e-4).epsilon(1e-3));
  CHECK(lambda_max(1.0, 1.0) == doctest::Approx(6.47e-4).epsilon(1e-3));
  CHECK(lambda_max(0.5, 1.0) == doctest::Approx(0.25 / (640 * (1 + std::sqrt(2.0) / 2))));
  for (int a = 1; a < 20; ++a)
    for (int b = 1; b < 20; ++b) {
      const double e = a / 20.0, d = b / 20.0;
      CHECK(lambda_max(e + 0.05, d) > lambda_max(e, d));
      CHECK(lambda_max(e, d + 0.05) > lambda_max(e, d));
    }
  CHECK(lambda_max(0.5, 0.5, 3) < lambda_max(0.5, 0.5, 2));
  CHECK_THROWS_AS(lambda_max(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(lambda_max(0.5, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(lambda_max(0.5, 0.5, 0), std::invalid_argument);
}

TEST_CASE("extension of a constant") {
  const double eps = 0.9, delta = 0.5, lambda = lambda_max(eps, delta);
  const Window w = rim_window(lambda);
  const auto dec = build_whitney(disk(), w, 7);
  const double c = -2.5;
  const auto f = GridFunction::sample(disk(), w, 7, [c](Vec2) { return c; });
  const auto ext = extend(f, disk(), dec, lambda, eps, delta);
  CHECK_FALSE(ext.above_lambda_max);
  CHECK(ext.fallback_count == 0);
  CHECK_FALSE(ext.assignment.empty());
  CHECK_FALSE(ext.zero_region.empty());
  check_structure(f, dec, ext, lambda);
  for (const auto& a : ext.assignment) CHECK(a.value == c);
  // only the values c and 0 occur, so the norm is at most 2 |c|
  const double direct = direct_window_norm(ext.extended, lambda);
  CHECK(ext.output_norm == doctest::Approx(direct).epsilon(1e-12));
  CHECK(ext.output_norm <= 2 * std::abs(c));
  CHECK(ext.input_norm == doctest::Approx(std::abs(c)));
  MESSAGE("constant: K = " << ext.output_norm / std::abs(c));
}

TEST_CASE("matching assignments") {
  const double eps = 0.9, delta = 0.5, lambda = lambda_max(eps, delta);
  const Window w = rim_window(lambda);
  const auto dec = build_whitney(disk(), w, 7);
  const auto f = random_dyadic(disk(), w, 7, 3);
  const auto ext = extend(f, disk(), dec, lambda, eps, delta);
  const double C = matching_constant(eps);
  for (const auto& a : ext.assignment) {
    const auto& q = dec[a.cube].cube;
    const auto& s = dec[a.source].cube;
    CHECK(dec[a.source].tag == CubeTag::E);
    CHECK(q.side() <= lambda);
    CHECK(s.side() >= q.side());
    CHECK(s.side() <= 4 * q.side());
    CHECK(box_distance(q.box(), s.box()) <= C * q.side() * (1 + 1e-12));
    CHECK(a.value == cube_average(f, s));
  }
  check_structure(f, dec, ext, lambda);
  CHECK(ext.output_norm == doctest::Approx(direct_window_norm(ext.extended, lambda)).epsilon(1e-9));
}

TEST_CASE("zero function and linearity") {
  const double eps = 0.9, delta = 0.5, lambda = lambda_max(eps, delta);
  const Window w = rim_window(lambda);
  const auto dec = build_whitney(disk(), w, 7);
  const auto zero = GridFunction::sample(disk(), w, 7, [](Vec2) { return 0.0; });
  const auto z = extend(zero, disk(), dec, lambda, eps, delta);
  for (std::size_t k = 0; k < z.extended.size(); ++k) CHECK(z.extended.value(k) == 0.0);
  CHECK(std::isnan(z.ratio));

  const auto f = random_dyadic(disk(), w, 7, 11);
  const auto g = random_dyadic(disk(), w, 7, 12);
  auto sum = f;
  for (std::size_t k = 0; k < sum.size(); ++k)
    if (f.mask(k) == CellMask::inside) sum.set(k, 2 * f.value(k) - g.value(k));
  sum.build_tables();
  ExtensionOptions opt;
  opt.norms = false;
  const auto ef = extend(f, disk(), dec, lambda, eps, delta, opt);
  const auto eg = extend(g, disk(), dec, lambda, eps, delta, opt);
  const auto es = extend(sum, disk(), dec, lambda, eps, delta, opt);
  for (std::size_t k = 0; k < f.size(); ++k)
    CHECK(es.extended.value(k) == 2 * ef.extended.value(k) - eg.extended.value(k));
}

TEST_CASE("extension errors") {
  const double eps = 0.9, delta = 0.5, lambda = lambda_max(eps, delta);
  const Window w = rim_window(lambda);
  const auto dec = build_whitney(disk(), w, 6);
  const auto f = GridFunction::sample(disk(), w, 6, [](Vec2) { return 1.0; });
  const auto coarse = GridFunction::sample(disk(), w, 5, [](Vec2) { return 1.0; });
  CHECK_THROWS_AS(extend(coarse, disk(), dec, lambda, eps, delta), BmoError);
  CHECK_THROWS_AS(extend(f, disk(), dec, 0.0, eps, delta), BmoError);

  // lambda far above the matching range: the interior E' cubes cannot be matched
  const auto wide = domain_window(disk());
  const auto dec_wide = build_whitney(disk(), wide, 6);
  const auto g = GridFunction::sample(disk(), wide, 6, [](Vec2) { return 1.0; });
  try {
    extend(g, disk(), dec_wide, 1.0, eps, delta);
    FAIL("expected ExtensionError");
  } catch (const ExtensionError& e) {
    CHECK_FALSE(e.cubes().empty());
    for (const auto& q : e.cubes()) CHECK(q.side() <= 1.0);
  }
  ExtensionOptions opt;
  opt.best_effort = true;
  const auto ext = extend(g, disk(), dec_wide, 1.0, eps, delta, opt);
  CHECK(ext.above_lambda_max);
  CHECK(ext.fallback_count > 0);
  check_structure(g, dec_wide, ext, 1.0);
}

TEST_CASE("log growth and dyadic data of the extension") {
  const double eps = 0.9, delta = 0.5, lambda = lambda_max(eps, delta);
  const Window w = rim_window(lambda);
  double k_at[2], abc_at[2];
  int slot = 0;
  for (const int level : {7, 8}) {
    const auto dec = build_whitney(disk(), w, level);
    const auto suite = standard_suite(disk(), dec, level, 8, 5);
    double k_max = 0.0, abc_max = 0.0;
    for (const auto& fn : suite) {
      const auto ext = extend(fn.values, disk(), dec, lambda, eps, delta);
      check_structure(fn.values, dec, ext, lambda);
      const double norm = ext.input_norm;
      REQUIRE(norm > 0.0);
      k_max = std::max(k_max, extension_log_growth(ext.extended, dec, lambda) / norm);
      const auto abc = bmo_rn_abc(ext.extended, lambda).abc;
      REQUIRE(abc.has_value());
      abc_max = std::max({abc_max, abc->a / norm, abc->b / norm, abc->c / norm});
    }
    MESSAGE("level " << level << ": log-growth K " << k_max << ", a/b/c K " << abc_max);
    k_at[slot] = k_max;
    abc_at[slot] = abc_max;
    ++slot;
  }
  CHECK(k_at[0] <= 4.0);
  CHECK(abc_at[0] <= 4.0);
  CHECK(std::abs(k_at[0] - k_at[1]) <= 0.25 * std::max(k_at[0], k_at[1]));
  CHECK(std::abs(abc_at[0] - abc_at[1]) <= 0.25 * std::max(abc_at[0], abc_at[1]));
}

TEST_CASE("operator norm experiment") {
  const double eps = 0.9, delta = 0.5, lm = lambda_max(eps, delta);
  const auto dec = build_whitney(disk(), rim_window(lm), 7);
  auto suite = standard_suite(disk(), dec, 7, 4, 9);
  REQUIRE(suite.size() == 4);
  CHECK(suite[0].name.rfind("constant", 0) == 0);
  CHECK(suite[1].name.rfind("k:", 0) == 0);
  CHECK(suite[2].name.rfind("dipole", 0) == 0);
  CHECK(suite[3].name.rfind("cellwise", 0) == 0);
  suite.push_back({"zero", GridFunction::sample(disk(), dec.window(), 7, [](Vec2) { return 0.0; })});
  const auto table = operator_norm_experiment(disk(), dec, eps, delta, {lm, lm / 2}, suite);
  REQUIRE(table.rows.size() == 10);
  REQUIRE(table.max_ratio.size() == 2);
  CHECK(std::isnan(table.rows[4].ratio));
  for (const auto& row : table.rows)
    if (row.function != "zero") CHECK(row.ratio >= 1.0 - 1e-12);  // Tf restricts to f
  CHECK(std::isfinite(table.max_ratio[0]));
  CHECK_THROWS_AS(operator_norm_experiment(disk(), dec, eps, delta, {lm}, {}), BmoError);

  const auto again = standard_suite(disk(), dec, 7, 4, 9);
  for (std::size_t t = 0; t < again.size(); ++t) CHECK(again[t].name == suite[t].name);
}

TEST_CASE("counterexample growth") {
  const auto big = counterexample_experiment({4, 16}, 2.0, 1.0 / 8, 0.476, 0.5);
  REQUIRE(big.size() == 2);
  CHECK(big[1].ratio > big[0].ratio);
  CHECK(big[1].input_norm == doctest::Approx(big[0].input_norm));
  const auto zero = counterexample_experiment({4}, 2.0, 1.0 / 8, 0.476, 0.5, [](Vec2) { return 0.0; });
  CHECK(std::isnan(zero[0].ratio));
}
