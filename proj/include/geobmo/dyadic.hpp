#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "geobmo/domain.hpp"
#include "geobmo/geometry.hpp"

namespace geobmo {

class DyadicError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Square world window [origin, origin + side]^2; level-l cubes have side side * 2^-l.
struct Window {
  Vec2 origin;
  double side = 1.0;

  static Window from_box(const Box& b);
  Box box() const { return {origin, origin + Vec2{side, side}}; }
  bool operator==(const Window&) const = default;
};

inline constexpr int kMaxLevel = 50;

// Identity of a cube inside one window.
struct CubeKey {
  int level = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;

  auto operator<=>(const CubeKey&) const = default;
};

struct CubeKeyHash {
  std::size_t operator()(const CubeKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.level) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.i) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.j) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct DyadicCube {
  Window window;
  int level = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;

  DyadicCube() = default;
  DyadicCube(const Window& w, int level_, std::int64_t i_, std::int64_t j_);
  DyadicCube(const Window& w, const CubeKey& k) : DyadicCube(w, k.level, k.i, k.j) {}

  CubeKey key() const { return {level, i, j}; }
  double side() const { return std::ldexp(window.side, -level); }
  Vec2 lo() const { return window.origin + Vec2{i * side(), j * side()}; }
  Vec2 hi() const { return window.origin + Vec2{(i + 1) * side(), (j + 1) * side()}; }
  Vec2 center() const { return window.origin + Vec2{(i + 0.5) * side(), (j + 0.5) * side()}; }
  Box box() const { return {lo(), hi()}; }
  double measure() const { return side() * side(); }
  // Corners counter-clockwise from lo.
  std::array<Vec2, 4> corners() const;

  DyadicCube parent() const;
  // k in 0..3: bit 0 selects the upper half in x, bit 1 in y.
  DyadicCube child(int k) const;
  // Ancestor at a coarser (or equal) level.
  DyadicCube ancestor(int at_level) const;
  // Q contains other as a dyadic descendant (or equals it).
  bool contains(const DyadicCube& other) const;

  bool operator==(const DyadicCube& o) const {
    return window == o.window && key() == o.key();
  }
};

std::ostream& operator<<(std::ostream& os, const DyadicCube& q);
std::string to_string(const DyadicCube& q);

struct CubeGeometry {
  Vec2 center;
  double side = 0.0;
  std::array<Vec2, 4> corners;
};

CubeGeometry cube_geometry(const DyadicCube& q);

// Closed boxes intersect. Works across levels; throws DyadicError for different windows.
bool adjacent(const DyadicCube& a, const DyadicCube& b);

// Level-l cube containing p; cells are half-open except at the window's upper edges.
std::optional<DyadicCube> cube_containing(const Window& w, int level, Vec2 p);

// Conservative closed-cube containment via the Lipschitz bound on sd.
bool cube_in_domain(const Domain& domain, const DyadicCube& q);
bool cube_in_complement(const Domain& domain, const DyadicCube& q);

// Level whose cell side equals h; throws DyadicError when h is not side * 2^-l.
int level_for_resolution(const Window& w, double h);

}  // namespace geobmo
