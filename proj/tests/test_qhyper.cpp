#include <cmath>
#include <random>

#include "doctest.h"
#include "geobmo/qhyper.hpp"
#include "geobmo/whitney.hpp"
#include "support.hpp"

using namespace geobmo;

namespace {

// Hyperbolic distance in the upper half-plane; the quasi-hyperbolic metric of
// the half-plane coincides with it.
double half_plane_distance(Vec2 a, Vec2 b) {
  const double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  return std::acosh(1.0 + d2 / (2.0 * a.y * b.y));
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("qh length of straight segments") {
  const Domain hp = make_domain(shapes::HalfPlane{});
  const Domain disk = make_domain(shapes::Disk{1.0});
  auto v = qh_length(hp, Polyline{{{0, 1}, {0, 4}}});
  CHECK(rel(v.value, std::log(4.0)) < 1e-6);
  CHECK(v.err <= 1e-6 * v.value);
  CHECK_FALSE(v.flagged);
  CHECK(rel(qh_length(hp, Polyline{{{0, 1}, {1, 1}}}).value, 1.0) < 1e-6);
  CHECK(rel(qh_length(disk, Polyline{{{-0.5, 0}, {0.5, 0}}}).value, 2 * std::log(2.0)) < 1e-6);
  // polyline with a corner: sum of the pieces
  const double parts = std::log(4.0) + 0.25;
  CHECK(rel(qh_length(hp, Polyline{{{0, 1}, {0, 4}, {1, 4}}}).value, parts) < 1e-6);

  CHECK_THROWS_AS(qh_length(disk, Polyline{{{-0.5, 0}, {1.5, 0}}}), QhError);
  CHECK_THROWS_AS(qh_length(hp, Polyline{{{0, 1}, {0, 0}}}), QhError);
  CHECK(segment_inside(disk, {-0.9, 0}, {0.9, 0}));
  CHECK_FALSE(segment_inside(make_domain(shapes::LShape{}), {1.8, 0.9}, {0.9, 1.8}));
}

TEST_CASE("j distance") {
  const Domain hp = make_domain(shapes::HalfPlane{});
  CHECK(rel(j_distance(hp, {0, 1}, {0, 2}), 0.5 * std::log(3.0)) < 1e-14);
  CHECK(j_distance(hp, {0.3, 0.7}, {0.3, 0.7}) == 0.0);
  const Domain disk = make_domain(shapes::Disk{1.0});
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vec2 a = testing::random_point(rng, {{-0.7, -0.7}, {0.7, 0.7}});
    const Vec2 b = testing::random_point(rng, {{-0.7, -0.7}, {0.7, 0.7}});
    CHECK(j_distance(disk, a, b) == j_distance(disk, b, a));
  }
}

TEST_CASE("metric graph edge weights lie between the endpoint and midpoint bounds") {
  const Domain dom = make_domain(shapes::LShape{});
  const Window w = domain_window(dom);
  const int level = 6;
  const std::int64_t n = std::int64_t{1} << level;
  const MetricGraph g(dom, w, level, GridBlock{0, 0, static_cast<int>(n), static_cast<int>(n)});
  int edges = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const int k = static_cast<int>(c);
    for (int d = 0; d < 8; ++d) {
      const int m = g.step(k, d);
      const double wt = g.weight(k, d);
      if (m < 0 || !g.is_node(k) || !g.is_node(m)) {
        CHECK(std::isinf(wt));
        continue;
      }
      const Vec2 a = g.center(k), b = g.center(m);
      const double len = distance(a, b);
      const double sa = dom.signed_distance(a), sb = dom.signed_distance(b),
                   sm = dom.signed_distance(lerp(a, b, 0.5));
      CHECK(wt >= len / std::max({sa, sb, sm}) * (1 - 1e-6));
      CHECK(wt <= len / std::min({sa, sb, sm}) * (1 + 1e-6));
      ++edges;
    }
  }
  CHECK(edges > 1000);
}

TEST_CASE("qh distance on the half-plane") {
  const Domain hp = make_domain(shapes::HalfPlane{});
  const auto a = qh_distance(hp, {0, 1}, {0, 4}, 1.0 / 512);
  CHECK(rel(a.value, std::log(4.0)) < 0.03);
  const auto b = qh_distance(hp, {0, 1}, {1, 1}, 1.0 / 512);
  CHECK(rel(b.value, std::acosh(1.5)) < 0.03);
  CHECK(b.value <= b.graph_value + b.err);
  // the returned curve really has the returned length
  CHECK(rel(qh_length(hp, b.geodesic).value, b.value) < 1e-5);
  CHECK(b.geodesic.points.front() == Vec2{0, 1});
  CHECK(b.geodesic.points.back() == Vec2{1, 1});

  std::mt19937_64 rng(11);
  for (int k = 0; k < 6; ++k) {
    const Vec2 x = testing::random_point(rng, {{-1.5, 0.2}, {1.5, 2.5}});
    const Vec2 y = testing::random_point(rng, {{-1.5, 0.2}, {1.5, 2.5}});
    const double exact = half_plane_distance(x, y);
    const auto got = qh_distance(hp, x, y, 1.0 / 128);
    CHECK(got.value >= exact * (1 - 1e-6));
    CHECK(rel(got.value, exact) < 0.03);
  }
  CHECK(qh_distance(hp, {0.5, 0.5}, {0.5, 0.5}, 1.0 / 64).value == 0.0);
  CHECK_THROWS_AS(qh_distance(hp, {0, 1}, {0, -1}, 1.0 / 64), QhError);
}

TEST_CASE("qh distance on the disk") {
  const Domain disk = make_domain(shapes::Disk{1.0});
  const auto c1 = qh_distance(disk, {-0.9, 0}, {0.9, 0}, 1.0 / 128);
  const auto c2 = qh_distance(disk, {-0.9, 0}, {0.9, 0}, 1.0 / 256);
  CHECK(rel(c1.value, c2.value) < 0.02);
  // radial segments are geodesics: k(0, r) = log(1 / (1 - r))
  const auto radial = qh_distance(disk, {0, 0}, {0, 0.95}, 1.0 / 128);
  CHECK(rel(radial.value, std::log(20.0)) < 0.01);
  CHECK(radial.value >= std::log(20.0) * (1 - 1e-6));
}

TEST_CASE("triangle inequality, log lower bound and refinement monotonicity") {
  const Domain disk = make_domain(shapes::Disk{1.0});
  const Domain l = make_domain(shapes::LShape{});
  std::mt19937_64 rng(5);
  for (const Domain* d : {&disk, &l}) {
    const Box bb = d->bounding_box();
    auto inside = [&] {
      for (;;) {
        const Vec2 p = testing::random_point(rng, bb);
        if (d->signed_distance(p) > 0.02) return p;
      }
    };
    for (int k = 0; k < 5; ++k) {
      const Vec2 x = inside(), y = inside(), z = inside();
      const auto xy = qh_distance(*d, x, y, 1.0 / 64);
      const auto yz = qh_distance(*d, y, z, 1.0 / 64);
      const auto xz = qh_distance(*d, x, z, 1.0 / 64);
      CHECK(xz.value <= xy.value + yz.value + 2 * (xy.err + yz.err + xz.err));
      const double lower = std::abs(std::log(d->signed_distance(x) / d->signed_distance(y)));
      CHECK(xy.value >= lower);
      const auto fine = qh_distance(*d, x, y, 1.0 / 128);
      CHECK(fine.value <= xy.value + xy.err + fine.err + 1e-3 * xy.value);
    }
  }
}

TEST_CASE("grid components separated by a narrow neck") {
  // two unit squares joined by a corridor of width 0.04
  const auto spec = parse_domain_spec(
      "polygon:0,0;1,0;1,0.48;2,0.48;2,0;3,0;3,1;2,1;2,0.52;1,0.52;1,1;0,1");
  const Domain dumbbell = make_domain(spec);
  try {
    qh_distance(dumbbell, {0.5, 0.2}, {2.5, 0.8}, 6.0 / 16);
    FAIL("expected a component failure");
  } catch (const QhError& e) {
    CHECK(std::string(e.what()).find("component sizes") != std::string::npos);
  }
  const auto ok = qh_distance(dumbbell, {0.5, 0.2}, {2.5, 0.8}, 6.0 / 1024);
  CHECK(std::isfinite(ok.value));
  // along the corridor the integrand is at least 1 / 0.02
  CHECK(ok.value > 50.0);
}

TEST_CASE("distance to the interior set") {
  const Domain hp = make_domain(shapes::HalfPlane{});
  const auto a = qh_distance_to_interior(hp, {0, 0.25}, 1.0, 1.0 / 256);
  CHECK(rel(a.value, std::log(4.0)) < 0.03);
  CHECK(hp.signed_distance(a.attaining) >= 1.0 - 1.0 / 256);
  const auto in = qh_distance_to_interior(hp, {0, 2}, 1.0, 1.0 / 256);
  CHECK(in.value == 0.0);
  CHECK(in.attaining == Vec2{0, 2});

  const Domain disk = make_domain(shapes::Disk{1.0});
  std::mt19937_64 rng(9);
  for (int k = 0; k < 4; ++k) {
    const double t = std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    const double r = std::uniform_real_distribution<double>(0.8, 0.97)(rng);
    const Vec2 x{r * std::cos(t), r * std::sin(t)};
    const auto ball = qh_distance_to_interior(disk, x, 0.5, 1.0 / 128);
    const auto full = qh_distance_to_interior(disk, x, 0.5, 1.0 / 128, {}, false);
    CHECK(rel(ball.value, full.value) < 1e-3);
    // radial ascent from sd = 1 - r to sd = 0.5
    CHECK(rel(ball.value, std::log(0.5 / (1 - r))) < 0.03);
    CHECK(distance(ball.attaining, x) <= ball.radius + 1.0 / 64);
  }
  CHECK_THROWS_AS(qh_distance_to_interior(disk, {0, 0.5}, 1.5, 1.0 / 64), QhError);

  CHECK(rel(eta_lambda(hp, {0, 0.25}, {3, 0.5}, 1.0, 1.0 / 256), std::log(4.0) + std::log(2.0)) <
        0.03);
  CHECK(eta_lambda(hp, {0, 0.25}, {3, 0.5}, 1.0, 1.0 / 128) ==
        eta_lambda(hp, {3, 0.5}, {0, 0.25}, 1.0, 1.0 / 128));
  CHECK(eta_lambda(hp, {0, 1.5}, {3, 2}, 1.0, 1.0 / 128) == 0.0);
}

TEST_CASE("distance field agrees with pairwise distances") {
  const Domain disk = make_domain(shapes::Disk{1.0});
  const Window w = domain_window(disk);
  const int level = 7;
  const auto field = qh_distance_field(disk, w, level, {0.3, 0.1});
  const std::int64_t n = std::int64_t{1} << level;
  const double h = w.side / n;
  int checked = 0;
  for (std::int64_t row = 4; row < n; row += 11)
    for (std::int64_t col = 3; col < n; col += 13) {
      const Vec2 c = w.origin + Vec2{(col + 0.5) * h, (row + 0.5) * h};
      const double v = field[row * n + col];
      if (disk.signed_distance(c) < h * std::sqrt(2.0) / 2) {
        CHECK(std::isnan(v));
        continue;
      }
      const double ref = qh_distance(disk, {0.3, 0.1}, c, h).value;
      CHECK(v >= ref * (1 - 1e-6));
      CHECK(v <= ref * 1.1 + 0.05);
      ++checked;
    }
  CHECK(checked > 10);
}

TEST_CASE("Whitney chains are comparable to qh distance") {
  const Domain disk = make_domain(shapes::Disk{1.0});
  const auto dec = build_whitney(disk, 9);
  std::mt19937_64 rng(21);
  double hop_per_k = 0.0, k_per_hop = 0.0;
  int pairs = 0;
  while (pairs < 12) {
    const Vec2 x = testing::random_point(rng, {{-1, -1}, {1, 1}});
    const Vec2 y = testing::random_point(rng, {{-1, -1}, {1, 1}});
    if (disk.signed_distance(x) < 0.05 || disk.signed_distance(y) < 0.05) continue;
    const double k = qh_distance(disk, x, y, 1.0 / 64).value;
    const auto chain = whitney_chain(dec, x, y);
    const double m = static_cast<double>(chain.size()) - 1;
    if (m < 1) continue;
    hop_per_k = std::max(hop_per_k, m / (k + 1));
    k_per_hop = std::max(k_per_hop, k / m);
    ++pairs;
  }
  MESSAGE("measured m <= " << hop_per_k << " (k + 1), k <= " << k_per_hop << " m");
  CHECK(hop_per_k < 10);
  CHECK(k_per_hop < 10);
}
