#include "geobmo/qhyper.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "geobmo/parallel.hpp"

namespace geobmo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kMaxDepth = 50;

double boundary_floor(const Domain& d) {
  const Box b = d.bounding_box();
  return 1e-12 * std::max(b.width(), b.height());
}

enum class SegStatus { ok, leaves, too_close };

struct SegQuad {
  double value = 0.0;
  double err = 0.0;
  bool flagged = false;
  SegStatus status = SegStatus::ok;
};

class SegmentIntegrator {
 public:
  SegmentIntegrator(const Domain& d, Vec2 a, Vec2 b, double floor)
      : d_(d), a_(a), ab_(b - a), len_(norm(b - a)), floor_(floor) {}

  SegQuad run(double sa, double sb, double rel_tol) {
    SegQuad q;
    if (len_ == 0.0) return q;
    const double sm = eval(0.5);
    if (!check(sa) || !check(sb) || !check(sm)) {
      q.status = status_;
      return q;
    }
    const double fa = 1 / sa, fb = 1 / sb, fm = 1 / sm;
    const double whole = len_ / 6 * (fa + 4 * fm + fb);
    rec(0.0, 1.0, fa, fm, fb, sm, whole, rel_tol * whole, 0, q);
    if (status_ != SegStatus::ok) q.status = status_;
    return q;
  }

 private:
  double eval(double t) const { return d_.signed_distance(a_ + ab_ * t); }

  bool check(double s) {
    if (s <= 0.0) status_ = SegStatus::leaves;
    else if (s < floor_) status_ = SegStatus::too_close;
    return status_ == SegStatus::ok;
  }

  void rec(double t0, double t1, double fa, double fm, double fb, double sm, double whole,
           double tol, int depth, SegQuad& q) {
    if (status_ != SegStatus::ok) return;
    const double tm = 0.5 * (t0 + t1);
    const double s1 = eval(0.5 * (t0 + tm)), s3 = eval(0.5 * (tm + t1));
    if (!check(s1) || !check(s3)) return;
    const double f1 = 1 / s1, f3 = 1 / s3;
    const double w = (t1 - t0) * len_;
    const double left = w / 12 * (fa + 4 * f1 + fm);
    const double right = w / 12 * (fm + 4 * f3 + fb);
    const double diff = left + right - whole;
    const bool certified = sm > 0.5 * w;
    if ((certified && std::abs(diff) <= 15 * tol) || depth >= kMaxDepth) {
      if (!certified) {
        status_ = SegStatus::leaves;
        return;
      }
      if (std::abs(diff) > 15 * tol) q.flagged = true;
      q.value += left + right + diff / 15;
      q.err += std::abs(diff) / 15;
      return;
    }
    rec(t0, tm, fa, f1, fm, s1, left, tol / 2, depth + 1, q);
    rec(tm, t1, fm, f3, fb, s3, right, tol / 2, depth + 1, q);
  }

  const Domain& d_;
  Vec2 a_, ab_;
  double len_;
  double floor_;
  SegStatus status_ = SegStatus::ok;
};

SegQuad integrate(const Domain& d, Vec2 a, Vec2 b, double sa, double sb, double tol) {
  return SegmentIntegrator(d, a, b, boundary_floor(d)).run(sa, sb, tol);
}

// Infinity when the segment is invalid.
double segment_cost(const Domain& d, Vec2 a, Vec2 b, double tol) {
  const auto q = integrate(d, a, b, d.signed_distance(a), d.signed_distance(b), tol);
  return q.status == SegStatus::ok ? q.value : kInf;
}

void throw_status(SegStatus s, Vec2 a, Vec2 b) {
  std::ostringstream msg;
  if (s == SegStatus::leaves) msg << "curve segment " << a << "-" << b << " leaves the domain";
  else msg << "curve segment " << a << "-" << b << " meets the boundary (unbounded integrand)";
  throw QhError(msg.str());
}

bool inside_rec(const Domain& d, Vec2 a, Vec2 b, int depth, double floor) {
  const Vec2 m = lerp(a, b, 0.5);
  const double s = d.signed_distance(m);
  const double half = 0.5 * distance(a, b);
  if (s > half && s > 0.0) return true;
  if (s <= floor || depth >= 60) return false;
  return inside_rec(d, a, m, depth + 1, floor) && inside_rec(d, m, b, depth + 1, floor);
}

}  // namespace

double Polyline::euclidean_length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) s += distance(points[i - 1], points[i]);
  return s;
}

Vec2 Polyline::at_fraction(double s) const {
  if (points.empty()) throw QhError("empty polyline");
  const double total = euclidean_length();
  double target = std::clamp(s, 0.0, 1.0) * total;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double l = distance(points[i - 1], points[i]);
    if (target <= l && l > 0.0) return lerp(points[i - 1], points[i], target / l);
    target -= l;
  }
  return points.back();
}

QhLength qh_segment_length(const Domain& domain, Vec2 a, Vec2 b, double tol) {
  const auto q = integrate(domain, a, b, domain.signed_distance(a), domain.signed_distance(b), tol);
  if (q.status != SegStatus::ok) throw_status(q.status, a, b);
  return {q.value, q.err, q.flagged};
}

QhLength qh_length(const Domain& domain, const Polyline& gamma, double tol) {
  if (gamma.points.size() < 2) throw QhError("a polyline needs at least 2 points");
  QhLength out;
  for (std::size_t i = 1; i < gamma.points.size(); ++i) {
    const auto s = qh_segment_length(domain, gamma.points[i - 1], gamma.points[i], tol);
    out.value += s.value;
    out.err += s.err;
    out.flagged = out.flagged || s.flagged;
  }
  if (out.err > tol * out.value) out.flagged = true;
  return out;
}

bool segment_inside(const Domain& domain, Vec2 a, Vec2 b) {
  const double floor = boundary_floor(domain);
  if (domain.signed_distance(a) <= floor || domain.signed_distance(b) <= floor) return false;
  return inside_rec(domain, a, b, 0, floor);
}

double j_distance(const Domain& domain, Vec2 x, Vec2 y) {
  const double dx = domain.signed_distance(x), dy = domain.signed_distance(y);
  if (!(dx > 0.0) || !(dy > 0.0)) throw QhError("j distance needs points of the domain");
  const double r = distance(x, y);
  return 0.5 * std::log((1 + r / dx) * (1 + r / dy));
}

// --- MetricGraph -------------------------------------------------------------

MetricGraph::MetricGraph(const Domain& domain, const Window& window, int level,
                         const GridBlock& block)
    : domain_(&domain),
      window_(window),
      level_(level),
      h_(std::ldexp(window.side, -level)),
      threshold_(h_ * std::sqrt(2.0)),
      block_(block) {
  if (block.cols <= 0 || block.rows <= 0) throw QhError("empty grid block");
  const std::size_t n = static_cast<std::size_t>(block.cols) * block.rows;
  sd_.resize(n);
  weights_.assign(4 * n, std::numeric_limits<float>::quiet_NaN());
  parallel_for(static_cast<std::size_t>(block.rows), [&](std::size_t r) {
    for (int c = 0; c < block.cols; ++c) {
      const int k = static_cast<int>(r) * block.cols + c;
      sd_[k] = domain.signed_distance(center(k));
    }
  });
}

int MetricGraph::cell(std::int64_t col, std::int64_t row) const {
  const std::int64_t c = col - block_.col0, r = row - block_.row0;
  if (c < 0 || r < 0 || c >= block_.cols || r >= block_.rows) return -1;
  return static_cast<int>(r * block_.cols + c);
}

int MetricGraph::cell_at(Vec2 p) const {
  return cell(static_cast<std::int64_t>(std::floor((p.x - window_.origin.x) / h_)),
              static_cast<std::int64_t>(std::floor((p.y - window_.origin.y) / h_)));
}

Vec2 MetricGraph::center(int k) const {
  return window_.origin + Vec2{(col_of(k) + 0.5) * h_, (row_of(k) + 0.5) * h_};
}

int MetricGraph::step(int k, int d) const {
  const int c = k % block_.cols + kDx[d], r = k / block_.cols + kDy[d];
  if (c < 0 || r < 0 || c >= block_.cols || r >= block_.rows) return -1;
  return r * block_.cols + c;
}

double MetricGraph::weight(int k, int d) const {
  const int n = step(k, d);
  if (n < 0 || !is_node(k) || !is_node(n)) return kInf;
  if (d >= 4) return weight(n, d - 4);
  float& w = weights_[4 * static_cast<std::size_t>(k) + d];
  if (std::isnan(w)) {
    const auto q = integrate(*domain_, center(k), center(n), sd_[k], sd_[n], 1e-6);
    w = q.status == SegStatus::ok ? static_cast<float>(q.value) : std::numeric_limits<float>::infinity();
  }
  return w;
}

std::vector<std::pair<int, double>> MetricGraph::connect(Vec2 p) const {
  std::vector<std::pair<int, double>> out;
  const auto c0 = static_cast<std::int64_t>(std::floor((p.x - window_.origin.x) / h_));
  const auto r0 = static_cast<std::int64_t>(std::floor((p.y - window_.origin.y) / h_));
  const double sp = domain_->signed_distance(p);
  if (!(sp > 0.0)) return out;
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      const int k = cell(c0 + dc, r0 + dr);
      if (k < 0 || !is_node(k)) continue;
      const Vec2 q = center(k);
      if (q == p) {
        out.emplace_back(k, 0.0);
        continue;
      }
      const auto s = integrate(*domain_, p, q, sp, sd_[k], 1e-7);
      if (s.status == SegStatus::ok) out.emplace_back(k, s.value);
    }
  }
  return out;
}

MetricGraph::Paths MetricGraph::shortest_paths(const std::vector<std::pair<int, double>>& sources,
                                               const std::function<bool(int, double)>& stop,
                                               const std::function<bool(int)>& allowed) const {
  Paths p;
  p.dist.assign(sd_.size(), kInf);
  p.prev.assign(sd_.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (const auto& [k, d0] : sources) {
    if (d0 < p.dist[k]) {
      p.dist[k] = d0;
      heap.push({d0, k});
    }
  }
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > p.dist[u]) continue;
    if (stop && stop(u, du)) {
      p.reached = u;
      break;
    }
    for (int d = 0; d < 8; ++d) {
      const int v = step(u, d);
      if (v < 0 || !is_node(v) || (allowed && !allowed(v))) continue;
      const double nd = du + weight(u, d);
      if (nd < p.dist[v]) {
        p.dist[v] = nd;
        p.prev[v] = u;
        heap.push({nd, v});
      }
    }
  }
  return p;
}

std::size_t MetricGraph::component_size(int node) const {
  if (node < 0 || !is_node(node)) return 0;
  std::vector<char> seen(sd_.size(), 0);
  std::vector<int> stack{node};
  seen[node] = 1;
  std::size_t count = 0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    ++count;
    for (int d = 0; d < 8; ++d) {
      const int v = step(u, d);
      if (v >= 0 && !seen[v] && is_node(v)) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return count;
}

// --- pair distances ----------------------------------------------------------

Window domain_window(const Domain& domain) { return Window::from_box(domain.bounding_box()); }

namespace {

// Grid block covering box at `level`, coarsened until it has at most max_cells cells.
std::pair<int, GridBlock> block_for(const Window& w, int level, Box box, int max_cells) {
  const Box wb = w.box();
  box.lo = {std::max(box.lo.x, wb.lo.x), std::max(box.lo.y, wb.lo.y)};
  box.hi = {std::min(box.hi.x, wb.hi.x), std::min(box.hi.y, wb.hi.y)};
  for (;; --level) {
    const double h = std::ldexp(w.side, -level);
    const std::int64_t n = std::int64_t{1} << level;
    auto idx = [&](double v, double o) {
      return std::clamp(static_cast<std::int64_t>(std::floor((v - o) / h)), std::int64_t{0}, n - 1);
    };
    GridBlock b;
    b.col0 = idx(box.lo.x, w.origin.x);
    b.row0 = idx(box.lo.y, w.origin.y);
    const std::int64_t cols = idx(box.hi.x, w.origin.x) - b.col0 + 1;
    const std::int64_t rows = idx(box.hi.y, w.origin.y) - b.row0 + 1;
    if (cols * rows <= max_cells || level == 0) {
      b.cols = static_cast<int>(cols);
      b.rows = static_cast<int>(rows);
      return {level, b};
    }
  }
}

int level_at_most(const Window& w, int level, double h_max) {
  while (level < 40 && std::ldexp(w.side, -level) > h_max) ++level;
  return level;
}

Polyline trace(const MetricGraph& g, const MetricGraph::Paths& p, int end, Vec2 first, Vec2 last) {
  std::vector<Vec2> nodes;
  for (int v = end; v >= 0; v = p.prev[v]) nodes.push_back(g.center(v));
  std::reverse(nodes.begin(), nodes.end());
  Polyline out;
  out.points.push_back(first);
  for (const auto& q : nodes)
    if (!(q == out.points.back())) out.points.push_back(q);
  if (!(last == out.points.back())) out.points.push_back(last);
  if (out.points.size() == 1) out.points.push_back(last);
  return out;
}

bool touches_inner_edge(const MetricGraph& g, const Polyline& path) {
  const auto& b = g.block();
  const std::int64_t n = std::int64_t{1} << g.level();
  for (const auto& q : path.points) {
    const int k = g.cell_at(q);
    if (k < 0) continue;
    const std::int64_t c = g.col_of(k), r = g.row_of(k);
    if ((c - b.col0 < 2 && b.col0 > 0) || (b.col0 + b.cols - 1 - c < 2 && b.col0 + b.cols < n) ||
        (r - b.row0 < 2 && b.row0 > 0) || (b.row0 + b.rows - 1 - r < 2 && b.row0 + b.rows < n))
      return true;
  }
  return false;
}

Polyline decimate(const Domain& d, const Polyline& path, int target) {
  const int n = static_cast<int>(path.points.size());
  if (n <= target + 1) return path;
  std::vector<int> idx;
  for (int k = 0; k <= target; ++k) {
    const int i = static_cast<int>(std::lround(static_cast<double>(k) * (n - 1) / target));
    if (idx.empty() || idx.back() != i) idx.push_back(i);
  }
  for (std::size_t k = 0; k + 1 < idx.size();) {
    const int a = idx[k], b = idx[k + 1];
    if (b - a > 1 && !segment_inside(d, path.points[a], path.points[b])) {
      idx.insert(idx.begin() + static_cast<long>(k) + 1, (a + b) / 2);
      continue;
    }
    ++k;
  }
  Polyline out;
  for (const int i : idx) out.points.push_back(path.points[i]);
  return out;
}

}  // namespace

Polyline refine_polyline(const Domain& domain, Polyline path, const QhOptions& opt,
                         const std::function<bool(Vec2)>& end_ok) {
  auto& pts = (path = decimate(domain, path, opt.refine_start)).points;
  if (pts.size() < 2) return path;
  const double tol = opt.quad_tol;
  auto cost = [&](Vec2 a, Vec2 b) { return segment_cost(domain, a, b, tol); };
  std::vector<double> seg(pts.size() - 1);
  auto recompute = [&] {
    seg.resize(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) seg[i] = cost(pts[i], pts[i + 1]);
  };
  auto total = [&] {
    double s = 0.0;
    for (const double v : seg) s += v;
    return s;
  };
  recompute();
  if (!std::isfinite(total())) throw QhError("refinement received an invalid polyline");

  constexpr double kGolden = 0.6180339887498949;
  double stage_start = total();
  for (int stage = 0;; ++stage) {
    for (int sweep = 0; sweep < 30; ++sweep) {
      const double before = total();
      const std::size_t last = pts.size() - 1;
      for (std::size_t i = 1; i <= last; ++i) {
        const bool is_end = i == last;
        if (is_end && !end_ok) break;
        const Vec2 a = pts[i - 1];
        Vec2 p = pts[i];
        const bool has_b = !is_end;
        const Vec2 b = has_b ? pts[i + 1] : p;
        auto local = [&](Vec2 q) {
          if (is_end && !end_ok(q)) return kInf;
          const double l = cost(a, q);
          return has_b ? l + cost(q, b) : l;
        };
        double current = seg[i - 1] + (has_b ? seg[i] : 0.0);
        Vec2 dirs[2];
        if (has_b && distance(a, b) > 0.0) {
          dirs[1] = normalized(b - a);
          dirs[0] = perp(dirs[1]);
        } else if (distance(a, p) > 0.0) {
          dirs[0] = normalized(p - a);
          dirs[1] = perp(dirs[0]);
        } else {
          continue;
        }
        const double r = 0.5 * (has_b ? std::min(distance(p, a), distance(p, b)) : distance(p, a));
        if (!(r > 0.0)) continue;
        for (const Vec2 u : dirs) {
          double lo = -r, hi = r;
          double c = hi - kGolden * (hi - lo), d = lo + kGolden * (hi - lo);
          double fc = local(p + u * c), fd = local(p + u * d);
          for (int it = 0; it < 25; ++it) {
            if (fc <= fd) {
              hi = d;
              d = c;
              fd = fc;
              c = hi - kGolden * (hi - lo);
              fc = local(p + u * c);
            } else {
              lo = c;
              c = d;
              fc = fd;
              d = lo + kGolden * (hi - lo);
              fd = local(p + u * d);
            }
          }
          const double t = fc <= fd ? c : d;
          const double ft = std::min(fc, fd);
          if (ft < current) {
            p = p + u * t;
            current = ft;
          }
        }
        if (!(p == pts[i])) {
          pts[i] = p;
          seg[i - 1] = cost(a, p);
          if (has_b) seg[i] = cost(p, b);
        }
      }
      const double after = total();
      if (before - after <= opt.refine_rel * after) break;
    }
    const double now = total();
    const bool small_gain = stage > 0 && stage_start - now <= opt.refine_rel * now;
    if (static_cast<int>(pts.size()) - 1 >= opt.refine_max || small_gain) break;
    stage_start = now;
    std::vector<Vec2> finer;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      finer.push_back(pts[i]);
      finer.push_back(lerp(pts[i], pts[i + 1], 0.5));
    }
    finer.push_back(pts.back());
    pts = std::move(finer);
    recompute();
  }
  return path;
}

QhPath qh_distance(const Domain& domain, Vec2 x, Vec2 y, double resolution, const QhOptions& opt) {
  const double sx = domain.signed_distance(x), sy = domain.signed_distance(y);
  if (!(sx > 0.0) || !(sy > 0.0)) throw QhError("qh distance needs points of the domain");
  QhPath out;
  if (x == y) {
    out.geodesic.points = {x, y};
    return out;
  }
  const Window w = domain_window(domain);
  const int base = level_for_resolution(w, resolution);
  const double gap = distance(x, y);
  const int fine = level_at_most(w, base, std::min({sx, sy, gap}) / 4);

  double best = kInf;
  Polyline best_path;
  double best_h = 0.0;
  std::size_t comp_x = 0, comp_y = 0;
  double margin = std::max(0.5 * gap, 8 * std::ldexp(w.side, -fine));
  for (int attempt = 0; attempt < 5; ++attempt, margin *= 4) {
    Box box{{std::min(x.x, y.x) - margin, std::min(x.y, y.y) - margin},
            {std::max(x.x, y.x) + margin, std::max(x.y, y.y) + margin}};
    if (attempt == 4) box = w.box();
    const auto [level, block] = block_for(w, fine, box, opt.max_block_cells);
    const MetricGraph g(domain, w, level, block);
    const auto src = g.connect(x);
    const auto dst = g.connect(y);
    std::unordered_map<int, double> tail;
    for (const auto& [k, c] : dst) tail.emplace(k, c);
    double found = segment_inside(domain, x, y) ? segment_cost(domain, x, y, 1e-7) : kInf;
    int end = -1;
    const auto paths = g.shortest_paths(src, [&](int u, double du) {
      if (du >= found) return true;
      if (const auto it = tail.find(u); it != tail.end() && du + it->second < found) {
        found = du + it->second;
        end = u;
      }
      return false;
    });
    if (!std::isfinite(found)) {
      comp_x = src.empty() ? 0 : g.component_size(src.front().first);
      comp_y = dst.empty() ? 0 : g.component_size(dst.front().first);
      continue;
    }
    Polyline path = end < 0 ? Polyline{{x, y}} : trace(g, paths, end, x, y);
    if (found < best) {
      best = found;
      best_path = path;
      best_h = g.h();
    }
    if (end < 0 || !touches_inner_edge(g, path) || attempt == 4) break;
  }
  if (!std::isfinite(best)) {
    std::ostringstream msg;
    msg << "no grid path between " << x << " and " << y << " at resolution " << resolution
        << " (component sizes " << comp_x << " and " << comp_y << ")";
    throw QhError(msg.str());
  }
  out.graph_value = best;
  out.h = best_h;
  const auto raw = qh_length(domain, best_path, opt.quad_tol);
  Polyline refined = refine_polyline(domain, best_path, opt);
  const auto ref = qh_length(domain, refined, opt.quad_tol);
  if (ref.value <= raw.value) {
    out.value = ref.value;
    out.err = ref.err;
    out.geodesic = std::move(refined);
  } else {
    out.value = raw.value;
    out.err = raw.err;
    out.geodesic = std::move(best_path);
  }
  return out;
}

InteriorDistance qh_distance_to_interior(const Domain& domain, Vec2 x, double lambda,
                                         double resolution, const QhOptions& opt,
                                         bool restrict_to_ball) {
  if (!(lambda > 0.0)) throw QhError("lambda must be positive");
  const double sx = domain.signed_distance(x);
  if (!(sx > 0.0)) throw QhError("distance to the interior set needs a point of the domain");
  InteriorDistance out;
  if (sx >= lambda) {
    out.attaining = x;
    out.geodesic.points = {x, x};
    return out;
  }
  const Window w = domain_window(domain);
  const int base = level_for_resolution(w, resolution);

  // First pass: nearest sampled point of the interior set on a grid of step <= lambda / 8.
  const int coarse = std::min(base, level_at_most(w, 0, lambda / 8));
  const double hc = std::ldexp(w.side, -coarse);
  const std::int64_t nc = std::int64_t{1} << coarse;
  const auto cx = static_cast<std::int64_t>(std::floor((x.x - w.origin.x) / hc));
  const auto cy = static_cast<std::int64_t>(std::floor((x.y - w.origin.y) / hc));
  std::optional<Vec2> y0;
  double y0_dist = kInf;
  for (std::int64_t r = 0; r <= nc; ++r) {
    if ((r - 1) * hc > y0_dist) break;
    for (std::int64_t dx = -r; dx <= r; ++dx)
      for (std::int64_t dy = -r; dy <= r; ++dy) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        const std::int64_t i = cx + dx, j = cy + dy;
        if (i < 0 || j < 0 || i >= nc || j >= nc) continue;
        const Vec2 c = w.origin + Vec2{(i + 0.5) * hc, (j + 0.5) * hc};
        if (domain.signed_distance(c) >= lambda && distance(c, x) < y0_dist) {
          y0 = c;
          y0_dist = distance(c, x);
        }
      }
  }
  if (!y0) throw QhError("interior set empty at this lambda");
  const double k0 = qh_distance(domain, x, *y0, resolution, opt).value;
  out.radius = std::max(lambda * k0, distance(x, *y0));

  const int fine = level_at_most(w, base, sx / 4);
  auto search = [&](bool restricted) -> std::optional<std::pair<double, Polyline>> {
    const double R = out.radius;
    const Box box = restricted ? Box{x - Vec2{R, R}, x + Vec2{R, R}} : w.box();
    const auto [level, block] = block_for(w, fine, box, opt.max_block_cells);
    const MetricGraph g(domain, w, level, block);
    const double slack = g.h();
    const auto paths = g.shortest_paths(
        g.connect(x), [&](int u, double) { return g.sd(u) >= lambda; },
        restricted ? std::function<bool(int)>([&](int u) { return distance(g.center(u), x) <= R + slack; })
                   : std::function<bool(int)>{});
    if (paths.reached < 0) return std::nullopt;
    const Vec2 end = g.center(paths.reached);
    return std::make_pair(paths.dist[paths.reached], trace(g, paths, paths.reached, x, end));
  };
  auto found = search(restrict_to_ball);
  if (!found && restrict_to_ball) found = search(false);
  if (!found) throw QhError("no grid path from the point to the interior set");

  Polyline path = found->second;
  const auto raw = qh_length(domain, path, opt.quad_tol);
  Polyline refined = refine_polyline(domain, path, opt,
                                     [&](Vec2 q) { return domain.signed_distance(q) >= lambda; });
  const auto ref = qh_length(domain, refined, opt.quad_tol);
  const bool use_refined = ref.value <= raw.value;
  out.value = use_refined ? ref.value : raw.value;
  out.err = use_refined ? ref.err : raw.err;
  out.geodesic = use_refined ? std::move(refined) : std::move(path);
  out.attaining = out.geodesic.points.back();
  return out;
}

double eta_lambda(const Domain& domain, Vec2 x, Vec2 y, double lambda, double resolution,
                  const QhOptions& options) {
  return qh_distance_to_interior(domain, x, lambda, resolution, options).value +
         qh_distance_to_interior(domain, y, lambda, resolution, options).value;
}

std::vector<double> qh_distance_field(const Domain& domain, const Window& window, int level,
                                      Vec2 source) {
  if (!(domain.signed_distance(source) > 0.0)) throw QhError("source must be a point of the domain");
  const std::int64_t n = std::int64_t{1} << level;
  if (n * n > (std::int64_t{1} << 26)) throw QhError("distance field grid too large");
  const MetricGraph g(domain, window, level, GridBlock{0, 0, static_cast<int>(n), static_cast<int>(n)});
  const auto src = g.connect(source);
  if (src.empty()) throw QhError("source cannot be joined to the grid at this resolution");
  const auto paths = g.shortest_paths(src);
  std::vector<double> out(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
  const double inside = g.h() * std::sqrt(2.0) / 2;
  parallel_for(g.cell_count(), [&](std::size_t k) {
    const int c = static_cast<int>(k);
    if (g.sd(c) < inside) return;
    if (g.is_node(c)) {
      if (std::isfinite(paths.dist[c])) out[k] = paths.dist[c];
      return;
    }
    double best = kInf;
    for (const auto& [m, w] : g.connect(g.center(c))) best = std::min(best, paths.dist[m] + w);
    if (std::isfinite(best)) out[k] = best;
  });
  return out;
}

}  // namespace geobmo
