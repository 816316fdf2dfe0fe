#include "geobmo/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace geobmo {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t == "NaN" || t == "nan" || t == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw IoError("not a number: '" + text + "'");
  return v;
}

CsvWriter::CsvWriter(std::ostream& out, const std::string& kind, std::vector<std::string> columns,
                     const std::vector<std::pair<std::string, std::string>>& meta)
    : out_(out), columns_(columns.size()) {
  out_ << "# geobmo " << kind << " v1\n";
  for (const auto& [k, v] : meta) out_ << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

CsvWriter& CsvWriter::cell(const std::string& text) {
  if (filled_ == columns_) throw IoError("too many cells in CSV row");
  if (text.find_first_of(",\n\"") != std::string::npos) {
    std::string q = "\"";
    for (const char c : text) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    out_ << (filled_ ? "," : "") << q << "\"";
  } else {
    out_ << (filled_ ? "," : "") << text;
  }
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (filled_ != columns_) throw IoError("CSV row has " + std::to_string(filled_) + " of " +
                                         std::to_string(columns_) + " cells");
  out_ << "\n";
  filled_ = 0;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw IoError("CSV (" + kind + ") has no column '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return parse_number(text(row, name));
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
  return rows.at(row).at(static_cast<std::size_t>(column(name)));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV");
  {
    std::istringstream head(line);
    std::string hash, tool, version;
    head >> hash >> tool >> t.kind >> version;
    if (hash != "#" || tool != "geobmo" || version.size() < 2 || version[0] != 'v')
      throw IoError("missing '# geobmo <kind> v<N>' header");
    t.version = std::stoi(version.substr(1));
  }
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) t.meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    auto cells = split_csv_line(line);
    if (!have_columns) {
      t.columns = std::move(cells);
      have_columns = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw IoError("CSV (" + t.kind + ") row with " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(t.columns.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_columns) throw IoError("CSV (" + t.kind + ") has no column line");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return read_csv(in);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_grid(std::ostream& out, const GridFunction& g) {
  const Window& w = g.window();
  out << "# geobmo grid v1\n";
  out << "# window=" << format_number(w.origin.x) << "," << format_number(w.origin.y) << ","
      << format_number(w.side) << "\n";
  out << "# level=" << g.level() << "\n";
  out << "# h=" << format_number(g.h()) << "\n";
  for (std::int64_t row = 0; row < g.n(); ++row) {
    for (std::int64_t col = 0; col < g.n(); ++col)
      out << (col ? "," : "") << format_number(g.value(g.index(col, row)));
    out << "\n";
  }
}

GridFunction read_grid(std::istream& in, const Domain& domain) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# geobmo grid v1")
    throw IoError("missing '# geobmo grid v1' header");
  std::map<std::string, std::string> meta;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    rows.push_back(split(line, ','));
  }
  if (!meta.count("window")) throw IoError("grid file without window=");
  const Window w = parse_window(meta["window"]);
  int level = 0;
  if (meta.count("level")) {
    level = std::stoi(meta["level"]);
  } else if (meta.count("h")) {
    level = level_for_resolution(w, parse_number(meta["h"]));
  } else {
    throw IoError("grid file without level= or h=");
  }
  GridFunction g(w, level);
  if (static_cast<std::int64_t>(rows.size()) != g.n())
    throw IoError("grid file has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(g.n()));
  g.classify(domain);
  for (std::int64_t row = 0; row < g.n(); ++row) {
    const auto& r = rows[static_cast<std::size_t>(row)];
    if (static_cast<std::int64_t>(r.size()) != g.n())
      throw IoError("grid row " + std::to_string(row) + " has " + std::to_string(r.size()) + " values");
    for (std::int64_t col = 0; col < g.n(); ++col) {
      const std::size_t k = g.index(col, row);
      if (g.mask(k) != CellMask::inside) continue;
      const double v = parse_number(r[static_cast<std::size_t>(col)]);
      if (std::isfinite(v)) g.set(k, v);
      else g.set_mask(k, CellMask::straddling);
    }
  }
  g.build_tables();
  return g;
}

GridFunction read_grid_file(const std::string& path, const Domain& domain) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return read_grid(in, domain);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

double parse_fraction(const std::string& text) {
  const std::string t = trim(text);
  if (const auto slash = t.find('/'); slash != std::string::npos) {
    const double num = parse_number(t.substr(0, slash));
    const double den = parse_number(t.substr(slash + 1));
    if (den == 0.0) throw IoError("zero denominator in '" + text + "'");
    return num / den;
  }
  if (const auto caret = t.find('^'); caret != std::string::npos)
    return std::pow(parse_number(t.substr(0, caret)), parse_number(t.substr(caret + 1)));
  return parse_number(t);
}

Vec2 parse_point(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw IoError("expected 'x,y', got '" + text + "'");
  return {parse_fraction(parts[0]), parse_fraction(parts[1])};
}

Window parse_window(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw IoError("expected 'ox,oy,side', got '" + text + "'");
  const Window w{{parse_fraction(parts[0]), parse_fraction(parts[1])}, parse_fraction(parts[2])};
  if (!(w.side > 0.0)) throw IoError("window side must be positive");
  return w;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_fraction(p));
  return out;
}

SvgCanvas::SvgCanvas(const Box& view, int pixels) : view_(view), pixels_(pixels) {
  scale_ = pixels / std::max(view.width(), view.height());
}

double SvgCanvas::px(double x) const { return (x - view_.lo.x) * scale_; }
double SvgCanvas::py(double y) const { return (view_.hi.y - y) * scale_; }

void SvgCanvas::rect(const Box& b, const std::string& fill, const std::string& stroke, double opacity) {
  std::ostringstream os;
  os << "<rect x=\"" << fmt(px(b.lo.x)) << "\" y=\"" << fmt(py(b.hi.y)) << "\" width=\""
     << fmt(b.width() * scale_) << "\" height=\"" << fmt(b.height() * scale_) << "\" fill=\"" << fill
     << "\" stroke=\"" << stroke << "\" stroke-width=\"0.5\"";
  if (opacity < 1.0) os << " fill-opacity=\"" << fmt(opacity) << "\"";
  os << "/>";
  body_.push_back(os.str());
}

void SvgCanvas::hatched(const Box& b, const std::string& color) {
  if (!hatch_defined_) {
    defs_.push_back("<pattern id=\"hatch\" width=\"4\" height=\"4\" patternUnits=\"userSpaceOnUse\" "
                    "patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"4\" stroke=\"" +
                    color + "\" stroke-width=\"1\"/></pattern>");
    hatch_defined_ = true;
  }
  rect(b, "url(#hatch)", color);
}

void SvgCanvas::polyline(const std::vector<Vec2>& pts, const std::string& stroke, double width) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width)
     << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i)
    os << (i ? " " : "") << fmt(px(pts[i].x)) << "," << fmt(py(pts[i].y));
  os << "\"/>";
  body_.push_back(os.str());
}

void SvgCanvas::circle(Vec2 c, double radius_px, const std::string& fill) {
  std::ostringstream os;
  os << "<circle cx=\"" << fmt(px(c.x)) << "\" cy=\"" << fmt(py(c.y)) << "\" r=\"" << fmt(radius_px)
     << "\" fill=\"" << fill << "\"/>";
  body_.push_back(os.str());
}

void SvgCanvas::text(Vec2 at, const std::string& s, int size_px) {
  std::ostringstream os;
  os << "<text x=\"" << fmt(px(at.x)) << "\" y=\"" << fmt(py(at.y)) << "\" font-size=\"" << size_px
     << "\" font-family=\"monospace\">" << escape(s) << "</text>";
  body_.push_back(os.str());
}

void SvgCanvas::contour(const Domain& domain, int cells, const std::string& stroke, double width) {
  const auto segs = zero_contour(domain, view_, cells);
  if (segs.empty()) return;
  std::ostringstream os;
  os << "<path fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\" d=\"";
  for (const auto& [a, b] : segs)
    os << "M" << fmt(px(a.x)) << " " << fmt(py(a.y)) << "L" << fmt(px(b.x)) << " " << fmt(py(b.y));
  os << "\"/>";
  body_.push_back(os.str());
}

void SvgCanvas::heatmap(const GridFunction& g, double lo, double hi) {
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::int64_t row = 0; row < g.n(); ++row)
    for (std::int64_t col = 0; col < g.n(); ++col) {
      const double v = g.value(g.index(col, row));
      if (!std::isfinite(v)) continue;
      const double t = std::clamp((v - lo) / span, 0.0, 1.0) * 2 - 1;  // -1 blue .. 1 red
      const int r = t > 0 ? 255 : static_cast<int>(255 * (1 + t));
      const int b = t < 0 ? 255 : static_cast<int>(255 * (1 - t));
      const int gr = static_cast<int>(255 * (1 - std::abs(t)));
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", r, gr, b);
      const Vec2 c = g.center(col, row);
      const double h = g.h() / 2;
      rect({c - Vec2{h, h}, c + Vec2{h, h}}, color);
    }
}

std::string SvgCanvas::str() const {
  std::ostringstream os;
  const int w = static_cast<int>(std::ceil(view_.width() * scale_));
  const int h = static_cast<int>(std::ceil(view_.height() * scale_));
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  if (!defs_.empty()) {
    os << "<defs>\n";
    for (const auto& d : defs_) os << d << "\n";
    os << "</defs>\n";
  }
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& b : body_) os << b << "\n";
  os << "</svg>\n";
  return os.str();
}

void SvgCanvas::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << str();
}

std::vector<std::pair<Vec2, Vec2>> zero_contour(const Domain& domain, const Box& view, int cells) {
  if (cells < 1) throw IoError("contour lattice needs at least one cell");
  const double hx = view.width() / cells, hy = view.height() / cells;
  const std::size_t m = static_cast<std::size_t>(cells) + 1;
  std::vector<double> s(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i)
      s[j * m + i] = domain.signed_distance(view.lo + Vec2{static_cast<double>(i) * hx, static_cast<double>(j) * hy});

  std::vector<std::pair<Vec2, Vec2>> segs;
  auto node = [&](std::size_t i, std::size_t j) {
    return view.lo + Vec2{static_cast<double>(i) * hx, static_cast<double>(j) * hy};
  };
  auto cross_at = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) {
    const double a = s[j0 * m + i0], b = s[j1 * m + i1];
    const double t = a == b ? 0.5 : a / (a - b);
    return lerp(node(i0, j0), node(i1, j1), std::clamp(t, 0.0, 1.0));
  };
  for (std::size_t j = 0; j + 1 < m; ++j)
    for (std::size_t i = 0; i + 1 < m; ++i) {
      // corners: 0 (i,j), 1 (i+1,j), 2 (i+1,j+1), 3 (i,j+1)
      const bool in[4] = {s[j * m + i] > 0, s[j * m + i + 1] > 0, s[(j + 1) * m + i + 1] > 0,
                          s[(j + 1) * m + i] > 0};
      const int code = in[0] | in[1] << 1 | in[2] << 2 | in[3] << 3;
      if (code == 0 || code == 15) continue;
      const Vec2 e[4] = {cross_at(i, j, i + 1, j), cross_at(i + 1, j, i + 1, j + 1),
                         cross_at(i, j + 1, i + 1, j + 1), cross_at(i, j, i, j + 1)};
      // edges: 0 bottom, 1 right, 2 top, 3 left
      std::vector<int> hits;
      if (in[0] != in[1]) hits.push_back(0);
      if (in[1] != in[2]) hits.push_back(1);
      if (in[3] != in[2]) hits.push_back(2);
      if (in[0] != in[3]) hits.push_back(3);
      if (hits.size() == 2) {
        segs.push_back({e[hits[0]], e[hits[1]]});
      } else if (hits.size() == 4) {
        const double centre = (s[j * m + i] + s[j * m + i + 1] + s[(j + 1) * m + i + 1] + s[(j + 1) * m + i]) / 4;
        if ((centre > 0) == in[0]) {
          segs.push_back({e[0], e[1]});
          segs.push_back({e[2], e[3]});
        } else {
          segs.push_back({e[0], e[3]});
          segs.push_back({e[1], e[2]});
        }
      }
    }
  return segs;
}

}  // namespace geobmo
