#include "geobmo/dyadic.hpp"

#include <sstream>

namespace geobmo {

Window Window::from_box(const Box& b) {
  const double side = std::max(b.width(), b.height());
  if (!(side > 0.0)) throw DyadicError("window from an empty box");
  return {b.center() - Vec2{side / 2, side / 2}, side};
}

DyadicCube::DyadicCube(const Window& w, int level_, std::int64_t i_, std::int64_t j_)
    : window(w), level(level_), i(i_), j(j_) {
  if (level < 0 || level > kMaxLevel)
    throw DyadicError("cube level " + std::to_string(level) + " out of range");
  if (!(w.side > 0.0)) throw DyadicError("window side must be positive");
}

std::array<Vec2, 4> DyadicCube::corners() const {
  const Vec2 a = lo(), b = hi();
  return {a, Vec2{b.x, a.y}, b, Vec2{a.x, b.y}};
}

namespace {

// Floor division by 2^s for possibly negative coordinates.
std::int64_t shift_down(std::int64_t v, int s) { return v >> s; }

}  // namespace

DyadicCube DyadicCube::parent() const {
  if (level == 0) throw DyadicError("root cube has no parent");
  return {window, level - 1, shift_down(i, 1), shift_down(j, 1)};
}

DyadicCube DyadicCube::child(int k) const {
  if (k < 0 || k > 3) throw DyadicError("child index must be in 0..3");
  return {window, level + 1, 2 * i + (k & 1), 2 * j + ((k >> 1) & 1)};
}

DyadicCube DyadicCube::ancestor(int at_level) const {
  if (at_level > level || at_level < 0) throw DyadicError("ancestor level out of range");
  const int s = level - at_level;
  return {window, at_level, shift_down(i, s), shift_down(j, s)};
}

bool DyadicCube::contains(const DyadicCube& other) const {
  if (!(window == other.window) || other.level < level) return false;
  const int s = other.level - level;
  return shift_down(other.i, s) == i && shift_down(other.j, s) == j;
}

std::ostream& operator<<(std::ostream& os, const DyadicCube& q) {
  return os << "(" << q.level << ", " << q.i << ", " << q.j << ")";
}

std::string to_string(const DyadicCube& q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

CubeGeometry cube_geometry(const DyadicCube& q) { return {q.center(), q.side(), q.corners()}; }

bool adjacent(const DyadicCube& a, const DyadicCube& b) {
  if (!(a.window == b.window)) throw DyadicError("adjacency of cubes from different windows");
  const int L = std::max(a.level, b.level);
  const int sa = L - a.level, sb = L - b.level;
  auto overlap = [&](std::int64_t ca, std::int64_t cb) {
    const std::int64_t alo = ca << sa, ahi = (ca + 1) << sa;
    const std::int64_t blo = cb << sb, bhi = (cb + 1) << sb;
    return alo <= bhi && blo <= ahi;
  };
  return overlap(a.i, b.i) && overlap(a.j, b.j);
}

std::optional<DyadicCube> cube_containing(const Window& w, int level, Vec2 p) {
  if (!w.box().contains(p)) return std::nullopt;
  const std::int64_t n = std::int64_t{1} << level;
  const double h = std::ldexp(w.side, -level);
  auto idx = [&](double t) {
    return std::clamp(static_cast<std::int64_t>(std::floor(t / h)), std::int64_t{0}, n - 1);
  };
  return DyadicCube(w, level, idx(p.x - w.origin.x), idx(p.y - w.origin.y));
}

bool cube_in_domain(const Domain& domain, const DyadicCube& q) {
  const double need = std::sqrt(static_cast<double>(kDim)) / 2 * q.side();
  return domain.signed_distance(q.center()) >= need - 1e-12 * q.window.side;
}

bool cube_in_complement(const Domain& domain, const DyadicCube& q) {
  const double need = std::sqrt(static_cast<double>(kDim)) / 2 * q.side();
  return -domain.signed_distance(q.center()) >= need - 1e-12 * q.window.side;
}

int level_for_resolution(const Window& w, double h) {
  if (!(h > 0.0)) throw DyadicError("resolution must be positive");
  const double r = w.side / h;
  const double l = std::round(std::log2(r));
  if (l < 0 || l > kMaxLevel || std::abs(std::ldexp(1.0, static_cast<int>(l)) - r) > 1e-9 * r) {
    std::ostringstream msg;
    msg << "resolution " << h << " is not a dyadic fraction of the window side " << w.side;
    throw DyadicError(msg.str());
  }
  return static_cast<int>(l);
}

}  // namespace geobmo
