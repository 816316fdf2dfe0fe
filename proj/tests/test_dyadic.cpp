#include <random>

#include "doctest.h"
#include "geobmo/dyadic.hpp"

using namespace geobmo;

namespace {

const Window kUnit{{0, 0}, 1.0};

bool boxes_meet(const Box& a, const Box& b) {
  return a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y && b.lo.y <= a.hi.y;
}

}  // namespace

TEST_CASE("cube geometry") {
  const auto g0 = cube_geometry(DyadicCube(kUnit, 0, 0, 0));
  CHECK(g0.center == Vec2{0.5, 0.5});
  CHECK(g0.side == 1.0);
  const auto g1 = cube_geometry(DyadicCube(kUnit, 1, 1, 0));
  CHECK(g1.center == Vec2{0.75, 0.25});
  CHECK(g1.side == 0.5);
  const DyadicCube q(Window{{-2, -2}, 4.0}, 3, 5, 2);
  const auto g = cube_geometry(q);
  const Vec2 h{g.side / 2, g.side / 2};
  CHECK(std::abs(g.corners[0].x - (g.center - h).x) <= 1e-15);
  CHECK(std::abs(g.corners[0].y - (g.center - h).y) <= 1e-15);
  CHECK(std::abs(g.corners[2].x - (g.center + h).x) <= 1e-15);
  CHECK(std::abs(g.corners[2].y - (g.center + h).y) <= 1e-15);
  CHECK(g.corners[0] == Vec2{-2 + 5 * 0.5, -2 + 2 * 0.5});
}

TEST_CASE("hierarchy") {
  const DyadicCube q(kUnit, 3, 5, 2);
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    const auto c = q.child(k);
    CHECK(c.parent() == q);
    CHECK(q.contains(c));
    CHECK_FALSE(c.contains(q));
    sum += c.measure();
    for (int m = k + 1; m < 4; ++m) {
      const Box a = c.box(), b = q.child(m).box();
      const double ox = std::min(a.hi.x, b.hi.x) - std::max(a.lo.x, b.lo.x);
      const double oy = std::min(a.hi.y, b.hi.y) - std::max(a.lo.y, b.lo.y);
      CHECK((ox <= 0.0 || oy <= 0.0));
    }
  }
  CHECK(sum == q.measure());
  CHECK(q.ancestor(1) == DyadicCube(kUnit, 1, 1, 0));
  CHECK_THROWS_AS(DyadicCube(kUnit, 0, 0, 0).parent(), DyadicError);
}

TEST_CASE("adjacency") {
  CHECK(adjacent(DyadicCube(kUnit, 1, 0, 0), DyadicCube(kUnit, 1, 1, 0)));
  CHECK_FALSE(adjacent(DyadicCube(kUnit, 1, 0, 0), DyadicCube(kUnit, 1, 2, 0)));
  CHECK(adjacent(DyadicCube(kUnit, 1, 0, 0), DyadicCube(kUnit, 2, 2, 1)));
  CHECK(adjacent(DyadicCube(kUnit, 2, 1, 1), DyadicCube(kUnit, 2, 1, 1)));
  CHECK_THROWS_AS(adjacent(DyadicCube(kUnit, 1, 0, 0), DyadicCube(Window{{0, 0}, 2.0}, 1, 0, 0)),
                  DyadicError);

  const Window w{{-1, -1}, 2.0};
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20000; ++k) {
    const int la = static_cast<int>(rng() % 7), lb = static_cast<int>(rng() % 7);
    auto coord = [&](int l) { return static_cast<std::int64_t>(rng() % (1u << l)); };
    const DyadicCube a(w, la, coord(la), coord(la)), b(w, lb, coord(lb), coord(lb));
    CHECK(adjacent(a, b) == boxes_meet(a.box(), b.box()));
    CHECK(adjacent(a, b) == adjacent(b, a));
  }
}

TEST_CASE("point location and resolution") {
  const auto q = cube_containing(kUnit, 2, {0.3, 0.8});
  REQUIRE(q);
  CHECK(q->key() == CubeKey{2, 1, 3});
  CHECK(cube_containing(kUnit, 2, {1.0, 1.0})->key() == CubeKey{2, 3, 3});
  CHECK_FALSE(cube_containing(kUnit, 2, {1.5, 0.5}));
  CHECK(level_for_resolution(kUnit, 1.0 / 256) == 8);
  CHECK(level_for_resolution(Window{{-2, -2}, 4.0}, 1.0 / 256) == 10);
  CHECK_THROWS_AS(level_for_resolution(kUnit, 0.3), DyadicError);
}

TEST_CASE("conservative containment") {
  const Domain disk = make_domain(shapes::Disk{1.0});
  const Window w{{-2, -2}, 4.0};
  CHECK(cube_in_domain(disk, DyadicCube(w, 3, 3, 3)));
  CHECK_FALSE(cube_in_domain(disk, DyadicCube(w, 2, 1, 1)));
  CHECK_FALSE(cube_in_domain(disk, DyadicCube(w, 1, 0, 0)));
  CHECK(cube_in_complement(disk, DyadicCube(w, 2, 0, 0)));
}
