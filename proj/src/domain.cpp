#include "geobmo/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace geobmo {

Domain::Domain(std::string label, SignedDistance sd, Box bounding_box, bool exact,
               std::vector<BoundaryFeature> features)
    : label_(std::move(label)),
      sd_(std::move(sd)),
      bbox_(bounding_box),
      exact_(exact),
      features_(std::move(features)) {
  if (!sd_) throw DomainError("domain '" + label_ + "' has no signed distance");
  if (!(bbox_.width() > 0.0) || !(bbox_.height() > 0.0))
    throw DomainError("domain '" + label_ + "' has an empty bounding box");
}

namespace {

Box centered_square(Vec2 c, double half) {
  return {{c.x - half, c.y - half}, {c.x + half, c.y + half}};
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive, got " + std::to_string(v));
}

struct PolygonData {
  std::vector<std::pair<Vec2, Vec2>> edges;
  std::vector<std::vector<Vec2>> loops;

  bool inside(Vec2 p) const {
    bool in = false;
    for (const auto& [a, b] : edges) {
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (p.x < xi) in = !in;
      }
    }
    return in;
  }

  double unsigned_distance(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : edges) best = std::min(best, point_segment_distance(p, a, b));
    return best;
  }

  double signed_distance(Vec2 p) const {
    const double d = unsigned_distance(p);
    if (d == 0.0) return 0.0;
    return inside(p) ? d : -d;
  }
};

void validate_loop(const std::vector<Vec2>& loop, const char* what) {
  if (loop.size() < 3)
    throw DomainError(std::string(what) + " needs at least 3 vertices");
  for (const auto& v : loop)
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw DomainError(std::string(what) + " has a non-finite vertex");
}

}  // namespace

Domain make_polygon_domain(const shapes::Polygon& poly, std::string label) {
  auto data = std::make_shared<PolygonData>();
  validate_loop(poly.outer, "polygon outer loop");
  data->loops.push_back(poly.outer);
  for (const auto& h : poly.holes) {
    validate_loop(h, "polygon hole");
    data->loops.push_back(h);
  }

  struct EdgeRef {
    std::size_t loop, index;
  };
  std::vector<EdgeRef> refs;
  for (std::size_t l = 0; l < data->loops.size(); ++l) {
    const auto& loop = data->loops[l];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2 a = loop[i], b = loop[(i + 1) % loop.size()];
      if (a == b) throw DomainError("polygon has a repeated vertex at loop " + std::to_string(l));
      data->edges.emplace_back(a, b);
      refs.push_back({l, i});
    }
  }

  // Simplicity: non-adjacent edges must not touch; loops must not touch each other.
  for (std::size_t e = 0; e < data->edges.size(); ++e) {
    for (std::size_t f = e + 1; f < data->edges.size(); ++f) {
      if (refs[e].loop == refs[f].loop) {
        const std::size_t n = data->loops[refs[e].loop].size();
        const std::size_t i = refs[e].index, j = refs[f].index;
        if ((i + 1) % n == j || (j + 1) % n == i) continue;
      }
      const auto& [a, b] = data->edges[e];
      const auto& [c, d] = data->edges[f];
      if (segments_intersect(a, b, c, d)) {
        std::ostringstream msg;
        msg << "polygon is not simple: edge " << a << "-" << b << " (loop " << refs[e].loop
            << ") meets edge " << c << "-" << d << " (loop " << refs[f].loop << ")";
        throw DomainError(msg.str());
      }
    }
  }

  PolygonData outer_only;
  for (std::size_t i = 0; i < poly.outer.size(); ++i)
    outer_only.edges.emplace_back(poly.outer[i], poly.outer[(i + 1) % poly.outer.size()]);
  for (std::size_t l = 1; l < data->loops.size(); ++l)
    for (const auto& v : data->loops[l])
      if (!outer_only.inside(v))
        throw DomainError("polygon hole " + std::to_string(l - 1) + " is not inside the outer loop");

  Box bb{poly.outer.front(), poly.outer.front()};
  for (const auto& v : poly.outer) {
    bb.lo = {std::min(bb.lo.x, v.x), std::min(bb.lo.y, v.y)};
    bb.hi = {std::max(bb.hi.x, v.x), std::max(bb.hi.y, v.y)};
  }
  const double half = std::max(bb.width(), bb.height());
  const Box bbox = centered_square(bb.center(), half);

  // Reflex vertices: the bisector of the two edges points out of Omega.
  std::vector<BoundaryFeature> features;
  for (const auto& loop : data->loops) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 v = loop[i];
      const Vec2 e1 = normalized(loop[(i + n - 1) % n] - v);
      const Vec2 e2 = normalized(loop[(i + 1) % n] - v);
      const Vec2 s = e1 + e2;
      if (norm(s) < 1e-9) continue;
      const Vec2 axis = normalized(s);
      const double shortest = std::min(distance(v, loop[(i + n - 1) % n]), distance(v, loop[(i + 1) % n]));
      if (data->inside(v + axis * (1e-6 * shortest))) continue;
      const double half_angle = 0.5 * std::acos(std::clamp(dot(e1, e2), -1.0, 1.0));
      features.push_back({BoundaryFeature::Kind::reflex, v, axis, half_angle,
                          "reflex vertex " + std::to_string(features.size())});
    }
  }

  return Domain(std::move(label), [data](Vec2 p) { return data->signed_distance(p); }, bbox,
                true, std::move(features));
}

namespace {

Domain build(const shapes::HalfPlane& s) {
  require_positive(s.window, "half_plane window");
  return Domain("half_plane", [](Vec2 p) { return p.y; }, centered_square({0, 0}, s.window / 2),
                true);
}

Domain build(const shapes::Disk& s) {
  require_positive(s.radius, "disk radius");
  const double r = s.radius;
  return Domain("disk", [r](Vec2 p) { return r - norm(p); }, centered_square({0, 0}, 2 * r), true);
}

Domain build(const shapes::Square& s) {
  require_positive(s.side, "square side");
  const double h = s.side / 2;
  return Domain(
      "square",
      [h](Vec2 p) {
        const double qx = std::abs(p.x) - h, qy = std::abs(p.y) - h;
        if (qx <= 0.0 && qy <= 0.0) return -std::max(qx, qy);
        return -std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
      },
      centered_square({0, 0}, s.side), true);
}

Domain build(const shapes::LShape& s) {
  require_positive(s.arm, "l_shape arm");
  require_positive(s.width, "l_shape width");
  if (!(s.width < s.arm)) throw DomainError("l_shape width must be smaller than arm");
  shapes::Polygon poly{{{0, 0}, {s.arm, 0}, {s.arm, s.width}, {s.width, s.width},
                        {s.width, s.arm}, {0, s.arm}},
                       {}};
  Domain d = make_polygon_domain(poly, "l_shape");
  return Domain("l_shape", [d](Vec2 p) { return d.signed_distance(p); },
                centered_square({s.arm / 2, s.arm / 2}, s.arm), true, d.features());
}

Domain build(const shapes::SlitDisk& s) {
  require_positive(s.radius, "slit_disk radius");
  require_positive(s.slit_length, "slit_disk slit length");
  if (!(s.slit_length < 2 * s.radius))
    throw DomainError("slit_disk slit length must be below the diameter");
  const double r = s.radius;
  const Vec2 tip{r - s.slit_length, 0.0}, end{r, 0.0};
  BoundaryFeature f{BoundaryFeature::Kind::reflex, tip, {1.0, 0.0}, 0.0, "slit tip"};
  return Domain(
      "slit_disk",
      [r, tip, end](Vec2 p) {
        const double dc = r - norm(p);
        if (dc <= 0.0) return dc;
        return std::min(dc, point_segment_distance(p, tip, end));
      },
      centered_square({0, 0}, 2 * r), true, {f});
}

Domain build(const shapes::Cusp& s) {
  if (!(s.exponent > 1.0)) throw DomainError("cusp exponent must exceed 1");
  constexpr int kSteps = 120;
  std::vector<Vec2> upper;
  for (int k = 0; k <= kSteps; ++k) {
    const double x = std::exp2(-k / 8.0);
    upper.push_back({x, std::pow(x, s.exponent)});
  }
  shapes::Polygon poly;
  poly.outer = upper;
  poly.outer.push_back({0.0, 0.0});
  for (auto it = upper.rbegin(); it != upper.rend(); ++it) poly.outer.push_back({it->x, -it->y});
  Domain d = make_polygon_domain(poly, "cusp");
  BoundaryFeature tip{BoundaryFeature::Kind::spike, {0.0, 0.0}, {1.0, 0.0}, 0.0, "cusp tip"};
  return Domain("cusp", [d](Vec2 p) { return d.signed_distance(p); },
                {{-1.0, -1.5}, {2.0, 1.5}}, true, {tip});
}

Domain build(const shapes::IntroLipschitz& s) {
  require_positive(s.window, "intro_lipschitz window");
  const Vec2 corner{0.0, 1.0};
  const double pi = std::numbers::pi;
  BoundaryFeature f{BoundaryFeature::Kind::reflex, corner,
                    {std::cos(3 * pi / 8), std::sin(3 * pi / 8)}, 3 * pi / 8, "corner"};
  return Domain(
      "intro_lipschitz",
      [corner](Vec2 p) {
        const double d = std::min({std::abs(p.y), point_ray_distance(p, corner, {1.0, 0.0}),
                                   point_ray_distance(p, corner, {-1.0, 1.0})});
        const bool in = p.y > 0.0 && p.y < std::max(1.0, 1.0 - p.x);
        return in ? d : -d;
      },
      centered_square({0, 0}, s.window / 2), true, {f});
}

Domain build(const shapes::Polygon& s) { return make_polygon_domain(s, "polygon"); }

// --- parsing ---------------------------------------------------------------

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  if (slash != std::string::npos)
    return parse_number(t.substr(0, slash)) / parse_number(t.substr(slash + 1));
  double v = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end)
    throw DomainError("cannot parse number '" + t + "'");
  return v;
}

std::vector<double> split_numbers(std::string_view text, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(sep, pos);
    const auto piece = text.substr(pos, next == std::string_view::npos ? text.npos : next - pos);
    if (!trim(piece).empty()) out.push_back(parse_number(piece));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

// "x,y;x,y;..." or "x y; x y; ..."
std::vector<Vec2> parse_loop(std::string_view text) {
  std::vector<Vec2> loop;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(';', pos);
    std::string piece(text.substr(pos, next == std::string_view::npos ? text.npos : next - pos));
    for (auto& c : piece)
      if (c == ',') c = ' ';
    std::istringstream is(piece);
    std::string a, b;
    if (is >> a) {
      if (!(is >> b)) throw DomainError("vertex '" + trim(piece) + "' needs two coordinates");
      loop.push_back({parse_number(a), parse_number(b)});
    }
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return loop;
}

void expect_params(const std::vector<double>& p, std::size_t max, const std::string& name) {
  if (p.size() > max)
    throw DomainError(name + " takes at most " + std::to_string(max) + " parameters");
}

}  // namespace

Domain make_domain(const DomainSpec& spec) {
  return std::visit([](const auto& s) { return build(s); }, spec);
}

DomainSpec parse_domain_spec(std::string_view text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  const std::string name = t.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : t.substr(colon + 1);
  if (name == "polygon") {
    shapes::Polygon poly;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= args.size()) {
      const auto next = args.find('/', pos);
      auto loop = parse_loop(std::string_view(args).substr(pos, next == std::string::npos ? std::string::npos : next - pos));
      if (first) poly.outer = std::move(loop);
      else poly.holes.push_back(std::move(loop));
      first = false;
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return poly;
  }
  const auto p = split_numbers(args, ',');
  auto at = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
  if (name == "half_plane") {
    expect_params(p, 1, name);
    return shapes::HalfPlane{at(0, 8.0)};
  }
  if (name == "disk") {
    expect_params(p, 1, name);
    return shapes::Disk{at(0, 1.0)};
  }
  if (name == "square") {
    expect_params(p, 1, name);
    return shapes::Square{at(0, 1.0)};
  }
  if (name == "l_shape") {
    expect_params(p, 2, name);
    return shapes::LShape{at(0, 2.0), at(1, 1.0)};
  }
  if (name == "slit_disk") {
    expect_params(p, 2, name);
    return shapes::SlitDisk{at(0, 1.0), at(1, 0.5 * at(0, 1.0))};
  }
  if (name == "cusp") {
    expect_params(p, 1, name);
    return shapes::Cusp{at(0, 4.0)};
  }
  if (name == "intro_lipschitz") {
    expect_params(p, 1, name);
    return shapes::IntroLipschitz{at(0, 8.0)};
  }
  throw DomainError("unknown domain '" + name + "'");
}

DomainSpec load_domain_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open domain file '" + path + "'");
  std::string shape;
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "shape") shape = value;
    else kv.emplace_back(key, value);
  }
  if (shape.empty()) throw DomainError(path + ": missing 'shape'");

  auto number = [&](const std::string& key, double fallback) {
    for (const auto& [k, v] : kv)
      if (k == key) return parse_number(v);
    return fallback;
  };
  auto check_keys = [&](std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : kv)
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        throw DomainError(path + ": key '" + k + "' is not valid for shape " + shape);
  };

  if (shape == "polygon") {
    check_keys({"outer", "hole"});
    shapes::Polygon poly;
    for (const auto& [k, v] : kv) {
      if (k == "outer") poly.outer = parse_loop(v);
      else poly.holes.push_back(parse_loop(v));
    }
    return poly;
  }
  if (shape == "half_plane") return check_keys({"window"}), shapes::HalfPlane{number("window", 8.0)};
  if (shape == "disk") return check_keys({"radius"}), shapes::Disk{number("radius", 1.0)};
  if (shape == "square") return check_keys({"side"}), shapes::Square{number("side", 1.0)};
  if (shape == "l_shape")
    return check_keys({"arm", "width"}), shapes::LShape{number("arm", 2.0), number("width", 1.0)};
  if (shape == "slit_disk") {
    check_keys({"radius", "slit_length"});
    const double r = number("radius", 1.0);
    return shapes::SlitDisk{r, number("slit_length", 0.5 * r)};
  }
  if (shape == "cusp") return check_keys({"exponent"}), shapes::Cusp{number("exponent", 4.0)};
  if (shape == "intro_lipschitz")
    return check_keys({"window"}), shapes::IntroLipschitz{number("window", 8.0)};
  throw DomainError(path + ": unknown shape '" + shape + "'");
}

DomainSpec resolve_domain_spec(const std::string& text) {
  if (std::ifstream(text).good()) return load_domain_spec_file(text);
  return parse_domain_spec(text);
}

std::string to_string(const DomainSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, shapes::HalfPlane>) os << "half_plane:" << s.window;
        else if constexpr (std::is_same_v<T, shapes::Disk>) os << "disk:" << s.radius;
        else if constexpr (std::is_same_v<T, shapes::Square>) os << "square:" << s.side;
        else if constexpr (std::is_same_v<T, shapes::LShape>) os << "l_shape:" << s.arm << ',' << s.width;
        else if constexpr (std::is_same_v<T, shapes::SlitDisk>)
          os << "slit_disk:" << s.radius << ',' << s.slit_length;
        else if constexpr (std::is_same_v<T, shapes::Cusp>) os << "cusp:" << s.exponent;
        else if constexpr (std::is_same_v<T, shapes::IntroLipschitz>) os << "intro_lipschitz:" << s.window;
        else {
          os << "polygon:";
          auto loop = [&](const std::vector<Vec2>& l) {
            for (std::size_t i = 0; i < l.size(); ++i) os << (i ? ";" : "") << l[i].x << ',' << l[i].y;
          };
          loop(s.outer);
          for (const auto& h : s.holes) {
            os << '/';
            loop(h);
          }
        }
      },
      spec);
  return os.str();
}

}  // namespace geobmo
