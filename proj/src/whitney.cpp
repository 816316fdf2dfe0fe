#include "geobmo/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

namespace geobmo {

const char* to_string(CubeTag tag) { return tag == CubeTag::E ? "E" : "E'"; }

namespace {

const double kSqrtN = std::sqrt(static_cast<double>(kDim));

// Index range at level m of cells whose closed boxes meet cell c of level l (one axis).
std::pair<std::int64_t, std::int64_t> touching_range(std::int64_t c, int l, int m) {
  if (m >= l) {
    const int s = m - l;
    return {(c << s) - 1, (c + 1) << s};
  }
  const int s = l - m;
  return {-((-c) >> s) - 1, (c + 1) >> s};
}

bool better(double d, const DyadicCube& q, double best_d, const DyadicCube* best) {
  if (!best) return true;
  if (d != best_d) return d < best_d;
  if (q.level != best->level) return q.level < best->level;
  return std::tie(q.i, q.j) < std::tie(best->i, best->j);
}

std::string describe(const DyadicCube& q) {
  std::ostringstream os;
  os << "cube (level " << q.level << ", i " << q.i << ", j " << q.j << ") at " << q.lo() << "-"
     << q.hi();
  return os.str();
}

}  // namespace

WhitneyDecomposition::WhitneyDecomposition(Window window, int max_depth,
                                           std::vector<WhitneyCube> cubes,
                                           std::vector<DyadicCube> frontier)
    : window_(window), max_depth_(max_depth), cubes_(std::move(cubes)), frontier_(std::move(frontier)) {
  std::sort(cubes_.begin(), cubes_.end(),
            [](const WhitneyCube& a, const WhitneyCube& b) { return a.cube.key() < b.cube.key(); });
  index_.reserve(cubes_.size() * 2);
  for (auto& v : by_level_) v.assign(max_depth_ + 1, {});
  for (int k = 0; k < static_cast<int>(cubes_.size()); ++k) {
    const auto& c = cubes_[k];
    if (!(c.cube.window == window_))
      throw WhitneyError("cube from a different window: " + describe(c.cube));
    if (c.cube.level > max_depth_) throw WhitneyError("cube deeper than max_depth: " + describe(c.cube));
    if (!index_.emplace(c.cube.key(), k).second)
      throw InvariantViolation("duplicate " + describe(c.cube), c.cube);
    by_level_[c.tag == CubeTag::E ? 0 : 1][c.cube.level].push_back(k);
  }
  adjacency_.resize(cubes_.size());
  for (std::size_t k = 0; k < cubes_.size(); ++k) {
    const auto& q = cubes_[k].cube;
    adjacency_[k] = scan_neighbors(q, 0, std::min(max_depth_, q.level + 2));
  }
}

double WhitneyDecomposition::frontier_fraction() const {
  return static_cast<double>(frontier_.size()) * std::ldexp(1.0, -2 * max_depth_);
}

int WhitneyDecomposition::find(const CubeKey& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

int WhitneyDecomposition::find(const DyadicCube& q) const {
  if (!(q.window == window_)) return -1;
  return find(q.key());
}

int WhitneyDecomposition::locate(Vec2 p) const {
  for (int m = 0; m <= max_depth_; ++m) {
    const auto cell = cube_containing(window_, m, p);
    if (!cell) return -1;
    if (const int k = find(cell->key()); k >= 0) return k;
  }
  return -1;
}

std::vector<int> WhitneyDecomposition::scan_neighbors(const DyadicCube& q, int min_level,
                                                      int max_level) const {
  std::vector<int> out;
  for (int m = min_level; m <= max_level; ++m) {
    const auto [xlo, xhi] = touching_range(q.i, q.level, m);
    const auto [ylo, yhi] = touching_range(q.j, q.level, m);
    const int s = m - q.level;
    for (std::int64_t a = xlo; a <= xhi; ++a) {
      for (std::int64_t b = ylo; b <= yhi; ++b) {
        if (s >= 0) {
          // Cells inside q (or q itself) are not neighbors.
          const bool in_x = a >= (q.i << s) && a < ((q.i + 1) << s);
          const bool in_y = b >= (q.j << s) && b < ((q.j + 1) << s);
          if (in_x && in_y) continue;
        } else if ((q.i >> -s) == a && (q.j >> -s) == b) {
          continue;  // ancestor
        }
        if (const int k = find(CubeKey{m, a, b}); k >= 0) out.push_back(k);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> WhitneyDecomposition::neighbors(const DyadicCube& q) const {
  const int k = find(q);
  if (k < 0) throw WhitneyError("not in the decomposition: " + describe(q));
  return adjacency_[k];
}

std::vector<int> WhitneyDecomposition::touching(const DyadicCube& q) const {
  if (!(q.window == window_)) throw WhitneyError("cube belongs to another window");
  return scan_neighbors(q, 0, max_depth_);
}

const std::vector<int>& WhitneyDecomposition::at_level(CubeTag tag, int level) const {
  static const std::vector<int> empty;
  if (level < 0 || level > max_depth_) return empty;
  return by_level_[tag == CubeTag::E ? 0 : 1][level];
}

std::size_t WhitneyDecomposition::count(CubeTag tag) const {
  std::size_t n = 0;
  for (const auto& v : by_level_[tag == CubeTag::E ? 0 : 1]) n += v.size();
  return n;
}

void WhitneyDecomposition::check_invariants() const {
  const double tol = 1e-9 * window_.side;
  WhitneyStats st;
  st.min_lo_ratio = std::numeric_limits<double>::infinity();
  st.max_hi_ratio = 0.0;
  for (std::size_t k = 0; k < cubes_.size(); ++k) {
    const auto& c = cubes_[k];
    const auto& q = c.cube;
    const double l = q.side();

    for (int m = 0; m < q.level; ++m)
      if (find(q.ancestor(m).key()) >= 0)
        throw InvariantViolation("WC1: overlaps its ancestor, " + describe(q), q);

    if (c.dist_lo < l - tol || c.dist_hi > 4 * kSqrtN * l + tol) {
      std::ostringstream msg;
      msg << "WC2: dist bracket [" << c.dist_lo << ", " << c.dist_hi << "] outside [" << l << ", "
          << 4 * kSqrtN * l << "] for " << describe(q);
      throw InvariantViolation(msg.str(), q);
    }
    st.min_lo_ratio = std::min(st.min_lo_ratio, c.dist_lo / l);
    st.max_hi_ratio = std::max(st.max_hi_ratio, c.dist_hi / l);

    // Every adjacent pair is seen from its finer member.
    for (const int n : scan_neighbors(q, 0, q.level)) {
      const int diff = q.level - cubes_[n].cube.level;
      if (diff > 2)
        throw InvariantViolation("WC3: " + describe(q) + " touches " + describe(cubes_[n].cube), q);
    }
    for (const int n : adjacency_[k]) {
      const double r = cubes_[n].cube.side() / l;
      if (r < 0.25 || r > 4.0)
        throw InvariantViolation("WC3: " + describe(q) + " touches " + describe(cubes_[n].cube), q);
      st.min_neighbor_ratio = std::min(st.min_neighbor_ratio, r);
      st.max_neighbor_ratio = std::max(st.max_neighbor_ratio, r);
    }
    st.max_neighbors = std::max(st.max_neighbors, adjacency_[k].size());
  }
  if (cubes_.empty()) st.min_lo_ratio = 0.0;
  stats_ = st;
}

std::pair<double, double> distance_bracket(const Domain& domain, const DyadicCube& q) {
  const double dc = std::abs(domain.signed_distance(q.center()));
  double hi = dc;
  for (const auto& p : q.corners()) hi = std::min(hi, std::abs(domain.signed_distance(p)));
  return {std::max(0.0, dc - kSqrtN / 2 * q.side()), hi};
}

WhitneyDecomposition build_whitney(const Domain& domain, const Window& window, int max_depth) {
  if (max_depth < 0 || max_depth > 40)
    throw WhitneyError("max_depth must be in 0..40, got " + std::to_string(max_depth));
  const Box bb = domain.bounding_box();
  const double slack = 1e-12 * window.side;
  const Box wb = window.box();
  if (wb.lo.x < bb.lo.x - slack || wb.lo.y < bb.lo.y - slack || wb.hi.x > bb.hi.x + slack ||
      wb.hi.y > bb.hi.y + slack)
    throw WhitneyError("window is not inside the bounding box of " + domain.label());

  std::vector<WhitneyCube> cubes;
  std::vector<DyadicCube> frontier;
  std::vector<DyadicCube> stack{DyadicCube(window, 0, 0, 0)};
  while (!stack.empty()) {
    const DyadicCube q = stack.back();
    stack.pop_back();
    const double l = q.side();
    const double sd = domain.signed_distance(q.center());
    const double need = 1.5 * kSqrtN * l;
    if (std::abs(sd) >= need) {
      const auto [lo, hi] = distance_bracket(domain, q);
      // The root has no parent bounding it from above.
      if (q.level > 0 || hi <= 4 * kSqrtN * l) {
        cubes.push_back({q, sd > 0 ? CubeTag::E : CubeTag::E_prime, lo, hi});
        continue;
      }
    }
    if (q.level == max_depth) {
      frontier.push_back(q);
      continue;
    }
    for (int k = 3; k >= 0; --k) stack.push_back(q.child(k));
  }
  std::sort(frontier.begin(), frontier.end(),
            [](const DyadicCube& a, const DyadicCube& b) { return a.key() < b.key(); });
  WhitneyDecomposition dec(window, max_depth, std::move(cubes), std::move(frontier));
  dec.check_invariants();
  return dec;
}

double matching_constant(double epsilon, int n) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  return 5 * std::sqrt(static_cast<double>(n)) + 8.0 * n / (epsilon * epsilon);
}

MatchResult matching_cube(const WhitneyDecomposition& dec, const DyadicCube& q, double epsilon,
                          double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("epsilon and delta must be positive");
  const double l = q.side();
  if (l > epsilon * delta / (16 * kDim) * (1 + 1e-12))
    throw std::invalid_argument("matching cube requested for a cube larger than eps*delta/(16n)");
  const double C = matching_constant(epsilon);
  const double accept = C * l;
  MatchResult res;
  res.search_radius = (C + 5 * kSqrtN) * l;

  const DyadicCube* best = nullptr;
  DyadicCube best_cube;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](int idx) {
    const auto& c = dec[idx];
    if (c.tag != CubeTag::E) return;
    const double d = box_distance(c.cube.box(), q.box());
    if (d > accept || d > res.search_radius) return;
    if (better(d, c.cube, best_d, best)) {
      best_cube = c.cube;
      best = &best_cube;
      best_d = d;
      res.index = idx;
      res.distance = d;
    }
  };

  for (int m = q.level; m >= std::max(0, q.level - 2); --m) {
    const auto& list = dec.at_level(CubeTag::E, m);
    if (list.empty()) continue;
    const double lm = std::ldexp(dec.window().side, -m);
    const auto rmax = static_cast<std::int64_t>(accept / lm) + 2;
    if (static_cast<double>(2 * rmax + 1) * (2 * rmax + 1) > static_cast<double>(list.size())) {
      for (const int idx : list) consider(idx);
      continue;
    }
    const DyadicCube a = q.ancestor(m);
    for (std::int64_t r = 0; r <= rmax; ++r) {
      if ((r - 1) * lm > std::min(best_d, accept)) break;
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        for (std::int64_t dy = -r; dy <= r; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
          if (const int idx = dec.find(CubeKey{m, a.i + dx, a.j + dy}); idx >= 0) consider(idx);
        }
      }
    }
  }
  return res;
}

InteriorPointResult find_interior_point(const Domain& domain, const DyadicCube& q, double epsilon) {
  InteriorPointResult res;
  const double l = q.side();
  res.required = epsilon * l / 32;
  res.best_sd = -std::numeric_limits<double>::infinity();
  auto sample = [&](Vec2 p) {
    const double s = domain.signed_distance(p);
    if (s > res.best_sd) {
      res.best_sd = s;
      res.point = p;
    }
  };
  const Vec2 c = q.center();
  sample(c);
  constexpr int kRadii = 9, kAngles = 64, kGrid = 31;
  for (int r = 0; r < kRadii; ++r) {
    const double rho = l / 8 + (l / 8) * r / (kRadii - 1);
    for (int a = 0; a < kAngles; ++a) {
      const double t = 2 * std::numbers::pi * a / kAngles;
      sample(c + Vec2{rho * std::cos(t), rho * std::sin(t)});
    }
  }
  const Vec2 lo = q.lo();
  for (int a = 0; a < kGrid; ++a)
    for (int b = 0; b < kGrid; ++b) sample(lo + Vec2{(a + 0.5) * l / kGrid, (b + 0.5) * l / kGrid});
  res.found = res.best_sd >= res.required;
  return res;
}

BigCubeResult find_big_cube_near(const WhitneyDecomposition& dec, Vec2 x, double epsilon,
                                 double delta) {
  if (!(epsilon > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("epsilon and delta must be positive");
  BigCubeResult res;
  res.min_side = epsilon * delta / (320.0 * kDim);
  res.radius = delta * (1 / epsilon + kSqrtN);
  const DyadicCube* best = nullptr;
  DyadicCube best_cube;
  double best_d = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= dec.max_depth(); ++m) {
    if (std::ldexp(dec.window().side, -m) < res.min_side) break;
    for (const int idx : dec.at_level(CubeTag::E, m)) {
      const auto& q = dec[idx].cube;
      const double d = point_box_distance(x, q.box());
      if (d < res.radius && better(d, q, best_d, best)) {
        best_cube = q;
        best = &best_cube;
        best_d = d;
        res.index = idx;
        res.distance = d;
      }
    }
  }
  return res;
}

std::vector<int> whitney_chain(const WhitneyDecomposition& dec, Vec2 x, Vec2 y) {
  auto start_cube = [&](Vec2 p, const char* name) {
    const int k = dec.locate(p);
    if (k < 0 || dec[k].tag != CubeTag::E) {
      std::ostringstream msg;
      msg << name << " = " << p << " lies in no E cube at max_depth " << dec.max_depth();
      throw WhitneyError(msg.str());
    }
    return k;
  };
  const int s = start_cube(x, "x"), t = start_cube(y, "y");
  std::vector<int> prev(dec.size(), -2);
  std::deque<int> queue{s};
  prev[s] = -1;
  while (!queue.empty() && prev[t] == -2) {
    const int u = queue.front();
    queue.pop_front();
    for (const int v : dec.neighbors(u)) {
      if (prev[v] != -2 || dec[v].tag != CubeTag::E) continue;
      prev[v] = u;
      queue.push_back(v);
    }
  }
  if (prev[t] == -2) throw WhitneyError("x and y lie in different components of the E graph");
  std::vector<int> path;
  for (int v = t; v != -1; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace geobmo
