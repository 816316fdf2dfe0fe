#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "geobmo/io.hpp"
#include "geobmo/qhyper.hpp"

using namespace geobmo;

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int t = 0; t < 1000; ++t) {
    const double v = u(rng) * std::pow(10.0, t % 20 - 10);
    CHECK(parse_number(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(std::isnan(parse_number(format_number(std::nan("")))));
  CHECK(std::isnan(parse_number("NA")));
  CHECK(parse_number(format_number(-INFINITY)) == -INFINITY);
  CHECK_THROWS_AS(parse_number("1.5x"), IoError);
  CHECK_THROWS_AS(parse_number(""), IoError);
}

TEST_CASE("fractions, points and windows") {
  CHECK(parse_fraction("1/256") == 1.0 / 256);
  CHECK(parse_fraction("2^-8") == 1.0 / 256);
  CHECK(parse_fraction(" 0.125 ") == 0.125);
  CHECK_THROWS_AS(parse_fraction("1/0"), IoError);
  CHECK(parse_point("0.5, -1") == Vec2{0.5, -1});
  CHECK_THROWS_AS(parse_point("1"), IoError);
  const Window w = parse_window("-2,-2,4");
  CHECK(w == Window{{-2, -2}, 4});
  CHECK_THROWS_AS(parse_window("0,0,-1"), IoError);
  CHECK(parse_list("1,1/2,2^-2") == std::vector<double>{1, 0.5, 0.25});
}

TEST_CASE("csv writer and reader") {
  std::stringstream s;
  {
    CsvWriter csv(s, "demo", {"name", "value", "flag"}, {{"domain", "disk"}});
    csv.cell("plain").cell(0.1).cell(true);
    csv.end_row();
    csv.cell("with,comma \"q\"").cell(std::nan("")).cell(false);
    csv.end_row();
    csv.cell("short");
    CHECK_THROWS_AS(csv.end_row(), IoError);
  }
  std::stringstream again(s.str().substr(0, s.str().rfind("short")));
  const auto t = read_csv(again);
  CHECK(t.kind == "demo");
  CHECK(t.version == 1);
  CHECK(t.meta.at("domain") == "disk");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.number(0, "value") == 0.1);
  CHECK(t.text(1, "name") == "with,comma \"q\"");
  CHECK(std::isnan(t.number(1, "value")));
  CHECK(t.number(1, "flag") == 0.0);
  CHECK_THROWS_AS(t.column("missing"), IoError);

  std::stringstream bad("name,value\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad), IoError);
}

TEST_CASE("grid files round trip") {
  const Domain d = make_domain(shapes::Disk{1.0});
  const Window w = domain_window(d);
  const auto g = GridFunction::sample(d, w, 5, [](Vec2 p) { return std::sin(3 * p.x) + p.y / 3; });
  std::stringstream s;
  write_grid(s, g);
  const auto back = read_grid(s, d);
  CHECK(back.level() == 5);
  CHECK(back.window() == w);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(back.mask(k) == g.mask(k));
    if (g.mask(k) == CellMask::inside) CHECK(back.value(k) == g.value(k));
  }
  std::stringstream truncated("# geobmo grid v1\n# window=-2,-2,4\n# level=1\n1,2\n");
  CHECK_THROWS_AS(read_grid(truncated, d), IoError);
}

TEST_CASE("zero contour of the disk") {
  const Domain d = make_domain(shapes::Disk{1.0});
  const Box view{{-2, -2}, {2, 2}};
  const auto segs = zero_contour(d, view, 64);
  REQUIRE(segs.size() > 100);
  double length = 0.0;
  for (const auto& [a, b] : segs) {
    CHECK(std::abs(norm(a) - 1) < 1e-3);
    CHECK(std::abs(norm(b) - 1) < 1e-3);
    length += distance(a, b);
  }
  // chords of the unit circle: a little under 2 pi
  CHECK(length <= 2 * M_PI);
  CHECK(length > 2 * M_PI * 0.999);

  SvgCanvas svg(view, 200);
  svg.contour(d, 64, "black");
  svg.rect({{0, 0}, {1, 1}}, "#ff0000");
  svg.hatched({{-1, -1}, {0, 0}}, "#888888");
  svg.text({0, 0}, "a<b");
  const auto text = svg.str();
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("a&lt;b") != std::string::npos);
  CHECK(text.find("pattern id=\"hatch\"") != std::string::npos);
  // y axis points up: the box [0,1]^2 starts at pixel row 50 of 200
  CHECK(text.find("<rect x=\"100.00\" y=\"50.00\" width=\"50.00\" height=\"50.00\"") != std::string::npos);
}
