#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geobmo/geometry.hpp"

namespace geobmo {

// The planar dimension every constant is evaluated at.
inline constexpr int kDim = 2;

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A boundary point where pair geometry is worth probing.
//  - reflex: an exterior wedge (a slit has half_angle 0) bisected by `axis`.
//  - spike:  an interior wedge of Omega bisected by `axis`, pointing into Omega.
struct BoundaryFeature {
  enum class Kind { reflex, spike };
  Kind kind = Kind::reflex;
  Vec2 point;
  Vec2 axis;
  double half_angle = 0.0;
  std::string name;
};

// Planar open set given by a signed-distance oracle: positive in Omega,
// negative in the interior of the complement, zero on the boundary.
class Domain {
 public:
  using SignedDistance = std::function<double(Vec2)>;

  Domain(std::string label, SignedDistance sd, Box bounding_box, bool exact,
         std::vector<BoundaryFeature> features = {});

  double signed_distance(Vec2 p) const { return sd_(p); }
  bool contains(Vec2 p) const { return sd_(p) > 0.0; }
  const Box& bounding_box() const { return bbox_; }
  const std::string& label() const { return label_; }
  bool is_exact() const { return exact_; }
  const std::vector<BoundaryFeature>& features() const { return features_; }

 private:
  std::string label_;
  SignedDistance sd_;
  Box bbox_;
  bool exact_;
  std::vector<BoundaryFeature> features_;
};

// dist(p, boundary), from either side.
inline double distance_to_boundary(const Domain& domain, Vec2 p) {
  return std::abs(domain.signed_distance(p));
}

namespace shapes {
// Unbounded shapes carry the side of the square window they are studied in.
struct HalfPlane {
  double window = 8.0;
};
struct Disk {
  double radius = 1.0;
};
struct Square {
  double side = 1.0;
};
struct LShape {
  double arm = 2.0;
  double width = 1.0;
};
// Disk of radius r minus the segment [(r - slit_length, 0), (r, 0)].
struct SlitDisk {
  double radius = 1.0;
  double slit_length = 0.5;
};
// {0 < x < 1, |y| < x^p}, polygonised with vertices refined toward the tip.
struct Cusp {
  double exponent = 4.0;
};
// {(x, y) : 0 < y < max(1, 1 - x)}.
struct IntroLipschitz {
  double window = 8.0;
};
struct Polygon {
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;
};
}  // namespace shapes

using DomainSpec =
    std::variant<shapes::HalfPlane, shapes::Disk, shapes::Square, shapes::LShape,
                 shapes::SlitDisk, shapes::Cusp, shapes::IntroLipschitz,
                 shapes::Polygon>;

Domain make_domain(const DomainSpec& spec);

// "disk:1", "slit_disk:1,0.5", "polygon:0,0;1,0;0,1", ... (see docs/formats.md).
DomainSpec parse_domain_spec(std::string_view text);
// Key/value spec file.
DomainSpec load_domain_spec_file(const std::string& path);
// Accepts either an existing file path or a builtin string.
DomainSpec resolve_domain_spec(const std::string& text);
std::string to_string(const DomainSpec& spec);

// Signed distance of a polygon with holes: exact distance to the boundary
// polylines, signed by even-odd parity. Throws DomainError on invalid loops.
Domain make_polygon_domain(const shapes::Polygon& poly, std::string label);

}  // namespace geobmo
