// geobmo command-line front end: one experiment per invocation.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "geobmo/bmo.hpp"
#include "geobmo/cigar.hpp"
#include "geobmo/extension.hpp"
#include "geobmo/io.hpp"
#include "geobmo/qhyper.hpp"
#include "geobmo/whitney.hpp"

namespace fs = std::filesystem;
using namespace geobmo;

namespace {

// Bad flags, unknown domains, non-dyadic resolutions.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string subcommand;
  std::string domain = "disk:1";
  std::string resolution = "1/64";
  std::string window;  // "ox,oy,side"; empty = the domain window
  std::string name;    // output file stem, defaults to the subcommand
  std::string out;
  std::uint64_t seed = 7;

  // geodesic
  std::string from, to;
  // classify
  double delta = 0.5;
  int budget = 200;
  // norm / extend
  std::string function = "k:0,0";
  std::string lambda;  // empty = lambda_max(eps, delta) for extend
  double epsilon = 0.5;
  bool abc = false;
  bool best_effort = false;
  std::string experiment = "none";
  std::string lambdas;
  std::string center;
  std::string windows = "4,16,64";
  std::size_t suite_size = 20;
  int level = 9;
  double span = 32.0;
  // report
  std::string dir;
};

std::string na(double v) { return std::isfinite(v) ? format_number(v) : "NA"; }

std::string stem(const ExperimentConfig& c) { return c.name.empty() ? c.subcommand : c.name; }

fs::path out_path(const ExperimentConfig& c, const std::string& suffix) {
  return fs::path(c.out) / (stem(c) + suffix);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  return f;
}

std::string cube_text(const DyadicCube& q) {
  return std::to_string(q.level) + ":" + std::to_string(q.i) + ":" + std::to_string(q.j);
}

Domain load_domain(const ExperimentConfig& c) {
  try {
    return make_domain(resolve_domain_spec(c.domain));
  } catch (const DomainError& e) {
    throw UsageError(std::string("--domain: ") + e.what());
  }
}

Window pick_window(const ExperimentConfig& c, const Domain& d) {
  if (c.window.empty()) return domain_window(d);
  try {
    return parse_window(c.window);
  } catch (const IoError& e) {
    throw UsageError(std::string("--window: ") + e.what());
  }
}

double parse_h(const std::string& text) {
  try {
    return parse_fraction(text);
  } catch (const IoError& e) {
    throw UsageError(std::string("--resolution: ") + e.what());
  }
}

int pick_level(const Window& w, double h) {
  try {
    return level_for_resolution(w, h);
  } catch (const DyadicError& e) {
    throw UsageError(std::string("--resolution: ") + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> common_meta(const ExperimentConfig& c, const Domain& d) {
  return {{"domain", d.label()}, {"domain_spec", c.domain}, {"seed", std::to_string(c.seed)}};
}

void draw_domain(SvgCanvas& svg, const Domain& d) { svg.contour(d, 400, "black", 1.5); }

// ---- decompose ----

int run_decompose(const ExperimentConfig& c) {
  const Domain d = load_domain(c);
  const Window w = pick_window(c, d);
  const double h = parse_h(c.resolution);
  const int depth = pick_level(w, h);
  const auto dec = build_whitney(d, w, depth);

  auto meta = common_meta(c, d);
  meta.push_back({"window", format_number(w.origin.x) + "," + format_number(w.origin.y) + "," + format_number(w.side)});
  meta.push_back({"depth", std::to_string(depth)});
  auto f = open_out(out_path(c, ".csv"));
  CsvWriter csv(f, "cubes", {"tag", "level", "i", "j", "side", "dist_lo", "dist_hi", "resolution", "err_bound"}, meta);
  for (const auto& q : dec.cubes()) {
    csv.cell(to_string(q.tag)).cell(q.cube.level).cell(static_cast<long long>(q.cube.i))
        .cell(static_cast<long long>(q.cube.j)).cell(q.cube.side()).cell(q.dist_lo).cell(q.dist_hi)
        .cell(h).cell(q.dist_hi - q.dist_lo);
    csv.end_row();
  }
  for (const auto& q : dec.frontier()) {
    const auto [lo, hi] = distance_bracket(d, q);
    csv.cell("frontier").cell(q.level).cell(static_cast<long long>(q.i)).cell(static_cast<long long>(q.j))
        .cell(q.side()).cell(lo).cell(hi).cell(h).cell(hi - lo);
    csv.end_row();
  }

  SvgCanvas svg(w.box());
  for (const auto& q : dec.cubes())
    svg.rect(q.cube.box(), q.tag == CubeTag::E ? "#9ecae1" : "#fdd0a2", "#555555");
  for (const auto& q : dec.frontier()) svg.hatched(q.box(), "#888888");
  draw_domain(svg, d);
  svg.save(out_path(c, ".svg").string());

  std::cout << "decompose " << d.label() << " depth " << depth << ": " << dec.count(CubeTag::E) << " E, "
            << dec.count(CubeTag::E_prime) << " E', " << dec.frontier().size() << " frontier cells\n";
  return 0;
}

// ---- geodesic ----

int run_geodesic(const ExperimentConfig& c) {
  const Domain d = load_domain(c);
  if (c.from.empty() || c.to.empty()) throw UsageError("geodesic needs --from and --to");
  Vec2 x, y;
  try {
    x = parse_point(c.from);
    y = parse_point(c.to);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
  const double h = parse_h(c.resolution);
  pick_level(domain_window(d), h);
  if (!(d.signed_distance(x) > 0.0) || !(d.signed_distance(y) > 0.0))
    throw UsageError("--from and --to must lie in the domain");
  const auto p = qh_distance(d, x, y, h);
  const double j = j_distance(d, x, y);

  auto meta = common_meta(c, d);
  {
    auto f = open_out(out_path(c, ".csv"));
    CsvWriter csv(f, "geodesic", {"x0", "y0", "x1", "y1", "value", "graph_value", "j", "euclidean",
                                  "points", "h_used", "resolution", "err_bound"}, meta);
    csv.cell(x.x).cell(x.y).cell(y.x).cell(y.y).cell(p.value).cell(p.graph_value).cell(j)
        .cell(distance(x, y)).cell(p.geodesic.points.size()).cell(p.h).cell(h).cell(p.err);
    csv.end_row();
  }
  {
    auto f = open_out(out_path(c, "_path.csv"));
    CsvWriter csv(f, "geodesic_path", {"index", "x", "y", "sd", "resolution", "err_bound"}, meta);
    for (std::size_t k = 0; k < p.geodesic.points.size(); ++k) {
      const Vec2 q = p.geodesic.points[k];
      csv.cell(k).cell(q.x).cell(q.y).cell(d.signed_distance(q)).cell(h).cell(p.err);
      csv.end_row();
    }
  }
  SvgCanvas svg(domain_window(d).box());
  draw_domain(svg, d);
  svg.polyline(p.geodesic.points, "#d62728", 2.0);
  svg.circle(x, 4, "#1f77b4");
  svg.circle(y, 4, "#1f77b4");
  svg.save(out_path(c, ".svg").string());
  std::cout << "k = " << format_number(p.value) << " +- " << format_number(p.err) << " (j = " << format_number(j)
            << ", h = " << format_number(p.h) << ")\n";
  return 0;
}

// ---- classify ----

int run_classify(const ExperimentConfig& c) {
  const Domain d = load_domain(c);
  const double h = parse_h(c.resolution);
  pick_level(domain_window(d), h);
  if (!(c.delta > 0.0)) throw UsageError("--delta must be positive");
  if (c.budget < 1) throw UsageError("--budget must be at least 1");
  const auto rep = classify(d, c.delta, c.budget, h, c.seed);

  auto meta = common_meta(c, d);
  meta.push_back({"delta", format_number(c.delta)});
  {
    auto f = open_out(out_path(c, "_pairs.csv"));
    CsvWriter csv(f, "classify_pairs", {"index", "xx", "xy", "yx", "yy", "dist", "epsilon", "a", "b", "j", "k",
                                        "sweep", "step", "flagged", "resolution", "err_bound"}, meta);
    for (std::size_t t = 0; t < rep.pairs.size(); ++t) {
      const auto& p = rep.pairs[t];
      csv.cell(t).cell(p.x.x).cell(p.x.y).cell(p.y.x).cell(p.y.y).cell(distance(p.x, p.y)).cell(p.epsilon)
          .cell(p.a).cell(p.b).cell(p.j).cell(p.flagged ? "NA" : format_number(p.k)).cell(p.sweep)
          .cell(p.step).cell(p.flagged).cell(h).cell(p.flagged ? "NA" : format_number(p.k_err));
      csv.end_row();
    }
  }
  {
    auto f = open_out(out_path(c, "_sweeps.csv"));
    CsvWriter csv(f, "classify_sweeps", {"feature", "step", "distance", "epsilon", "d", "resolution", "err_bound"}, meta);
    for (const auto& s : rep.sweeps)
      for (std::size_t k = 0; k < s.distance.size(); ++k) {
        csv.cell(s.feature).cell(k).cell(s.distance[k]).cell(s.epsilon[k])
            .cell(k < s.d.size() ? na(s.d[k]) : "NA").cell(h).cell("NA");
        csv.end_row();
      }
  }
  std::ostringstream txt;
  txt << "domain: " << rep.domain << "\n"
      << "delta: " << format_number(rep.delta) << "\n"
      << "resolution: " << format_number(rep.resolution) << "\n"
      << "pairs: " << rep.pair_count << " (flagged " << rep.flagged << ")\n"
      << "epsilon_hat: " << format_number(rep.epsilon_hat) << " (fine " << format_number(rep.epsilon_hat_fine) << ")\n"
      << "ab_hat: " << format_number(rep.ab_hat.first) << " " << format_number(rep.ab_hat.second) << " (fine "
      << format_number(rep.ab_hat_fine.first) << " " << format_number(rep.ab_hat_fine.second) << ")\n"
      << "cd_hat: " << format_number(rep.cd_hat.first) << " " << format_number(rep.cd_hat.second) << " (fine "
      << format_number(rep.cd_hat_fine.first) << " " << format_number(rep.cd_hat_fine.second) << ")\n"
      << "k_over_j_plus_1: " << format_number(rep.prop26_constant) << "\n";
  for (const auto& s : rep.sweeps) {
    txt << "sweep " << s.feature << ": epsilon";
    for (const double e : s.epsilon) txt << " " << format_number(e);
    txt << "; d";
    for (const double v : s.d) txt << " " << na(v);
    txt << "; diverges eps=" << s.epsilon_diverges << " d=" << s.d_diverges << "\n";
  }
  for (const int t : rep.worst_pairs) {
    const auto& p = rep.pairs[t];
    txt << "worst pair " << t << ": " << p.x << " " << p.y << " epsilon " << format_number(p.epsilon) << "\n";
  }
  txt << "verdict: " << to_string(rep.verdict) << "\n"
      << "reason: " << rep.reason << "\n";
  open_out(out_path(c, ".txt")) << txt.str();
  std::cout << txt.str();

  SvgCanvas svg(domain_window(d).box());
  draw_domain(svg, d);
  for (const int t : rep.worst_pairs) {
    svg.polyline(rep.pairs[t].witness.points, "#d62728", 1.5);
    svg.circle(rep.pairs[t].x, 3, "#1f77b4");
    svg.circle(rep.pairs[t].y, 3, "#1f77b4");
  }
  svg.save(out_path(c, ".svg").string());
  return 0;
}

// ---- function specs shared by norm and extend ----

std::vector<double> numbers_after(const std::string& spec, std::size_t n) {
  const auto colon = spec.find(':');
  std::vector<double> v;
  if (colon != std::string::npos) {
    std::string body = spec.substr(colon + 1);
    std::replace(body.begin(), body.end(), ';', ',');
    v = parse_list(body);
  }
  if (v.size() != n)
    throw UsageError("--function '" + spec + "' needs " + std::to_string(n) + " numbers");
  return v;
}

GridFunction make_function(const std::string& spec, const Domain& d, const Window& w, int level,
                           std::uint64_t seed) {
  if (std::ifstream(spec).good()) return read_grid_file(spec, d);
  const std::string kind = spec.substr(0, spec.find(':'));
  try {
    if (kind == "constant") {
      const double c = numbers_after(spec, 1)[0];
      return GridFunction::sample(d, w, level, [c](Vec2) { return c; });
    }
    if (kind == "linear") {
      const auto a = numbers_after(spec, 2);
      return GridFunction::sample(d, w, level, [a](Vec2 p) { return a[0] * p.x + a[1] * p.y; });
    }
    if (kind == "posx") return GridFunction::sample(d, w, level, [](Vec2 p) { return std::max(p.x, 0.0); });
    if (kind == "k") {
      const auto a = numbers_after(spec, 2);
      return gen_qh_function(d, w, level, {a[0], a[1]});
    }
    if (kind == "dipole") {
      const auto a = numbers_after(spec, 6);
      return gen_dipole(d, w, level, {a[0], a[1]}, {a[2], a[3]}, a[4], a[5]);
    }
    if (kind == "cellwise") {
      const auto s = spec.find(':') == std::string::npos ? seed : static_cast<std::uint64_t>(numbers_after(spec, 1)[0]);
      return gen_cellwise_random(d, build_whitney(d, w, level), level, s);
    }
  } catch (const IoError& e) {
    throw UsageError(std::string("--function: ") + e.what());
  }
  throw UsageError("unknown --function '" + spec + "' (constant, linear, posx, k, dipole, cellwise or a grid file)");
}

double parse_value(const std::string& flag, const std::string& text) {
  try {
    return parse_fraction(text);
  } catch (const IoError& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

// ---- norm ----

int run_norm(const ExperimentConfig& c) {
  const Domain d = load_domain(c);
  const Window w = pick_window(c, d);
  const double h = parse_h(c.resolution);
  const int level = pick_level(w, h);
  if (c.lambda.empty()) throw UsageError("norm needs --lambda");
  const double lambda = parse_value("--lambda", c.lambda);
  if (!(lambda > 0.0)) throw UsageError("--lambda must be positive");
  const auto f = make_function(c.function, d, w, level, c.seed);
  const auto rep = bmo_lambda_norm(f, d, lambda);
  const auto hom = bmo_homogeneous_norm(f, d);
  std::optional<NormReport::Abc> abc;
  if (c.abc) abc = bmo_rn_abc(f, lambda).abc;

  auto meta = common_meta(c, d);
  meta.push_back({"function", c.function});
  auto f_out = open_out(out_path(c, ".csv"));
  CsvWriter csv(f_out, "norm", {"lambda", "value", "small_scale", "large_scale", "bmo", "small_cube", "large_cube",
                                "cubes", "excluded_fraction", "degenerate", "subsampled", "a", "b", "c",
                                "resolution", "err_bound"}, meta);
  csv.cell(lambda).cell(rep.value).cell(rep.small_scale_part).cell(rep.large_scale_part).cell(hom.value)
      .cell(rep.small_cube ? cube_text(*rep.small_cube) : "NA").cell(rep.large_cube ? cube_text(*rep.large_cube) : "NA")
      .cell(static_cast<long long>(rep.cubes)).cell(rep.excluded_fraction).cell(rep.degenerate).cell(rep.subsampled)
      .cell(abc ? format_number(abc->a) : "NA").cell(abc ? format_number(abc->b) : "NA")
      .cell(abc ? format_number(abc->c) : "NA").cell(f.h()).cell("NA");
  csv.end_row();

  std::ostringstream txt;
  txt << "function: " << c.function << "\n"
      << "lambda: " << format_number(lambda) << "\n"
      << "bmo_lambda: " << format_number(rep.value) << " = " << format_number(rep.small_scale_part) << " (l < lambda) + "
      << format_number(rep.large_scale_part) << " (l >= lambda)\n"
      << "BMO: " << format_number(hom.value) << "\n"
      << "cubes: " << rep.cubes << ", excluded fraction " << format_number(rep.excluded_fraction) << "\n";
  if (rep.degenerate) txt << "warning: no cube with l >= lambda fits in the domain\n";
  if (rep.subsampled) txt << "warning: evaluation cap hit, some levels were skipped\n";
  if (abc) txt << "a b c: " << format_number(abc->a) << " " << format_number(abc->b) << " " << format_number(abc->c) << "\n";
  open_out(out_path(c, ".txt")) << txt.str();
  std::cout << txt.str();
  return 0;
}

// ---- extend ----

void write_extension(const ExperimentConfig& c, const Domain& d, const WhitneyDecomposition& dec,
                     const ExtensionResult& ext) {
  {
    auto f = open_out(out_path(c, "_grid.csv"));
    write_grid(f, ext.extended);
  }
  {
    auto meta = common_meta(c, d);
    meta.push_back({"lambda", format_number(ext.lambda)});
    auto f = open_out(out_path(c, "_assignment.csv"));
    CsvWriter csv(f, "assignment", {"level", "i", "j", "side", "source_level", "source_i", "source_j", "value",
                                    "distance", "fallback", "resolution", "err_bound"}, meta);
    for (const auto& a : ext.assignment) {
      const auto& q = dec[a.cube].cube;
      const auto& s = dec[a.source].cube;
      csv.cell(q.level).cell(static_cast<long long>(q.i)).cell(static_cast<long long>(q.j)).cell(q.side())
          .cell(s.level).cell(static_cast<long long>(s.i)).cell(static_cast<long long>(s.j)).cell(a.value)
          .cell(a.distance).cell(a.fallback).cell(ext.extended.h()).cell("NA");
      csv.end_row();
    }
    for (const int idx : ext.zero_region) {
      const auto& q = dec[idx].cube;
      csv.cell(q.level).cell(static_cast<long long>(q.i)).cell(static_cast<long long>(q.j)).cell(q.side())
          .cell("NA").cell("NA").cell("NA").cell(0.0).cell("NA").cell(false).cell(ext.extended.h()).cell("NA");
      csv.end_row();
    }
  }
  double lo = 0.0, hi = 0.0;
  for (const double v : ext.extended.values())
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  SvgCanvas svg(ext.extended.window().box());
  svg.heatmap(ext.extended, std::min(lo, -hi), std::max(hi, -lo));
  draw_domain(svg, d);
  svg.save(out_path(c, ".svg").string());
}

int run_operator_norm(const ExperimentConfig& c, const Domain& d) {
  const double lm = lambda_max(std::min(c.epsilon, 1.0), std::min(c.delta, 1.0));
  std::vector<double> lambdas = c.lambdas.empty() ? std::vector<double>{lm, lm / 2, lm / 4}
                                                  : parse_list(c.lambdas);
  LocalWindowConfig cfg;
  cfg.span = c.span;
  cfg.level = c.level;
  cfg.suite_size = c.suite_size;
  cfg.seed = c.seed;
  if (c.center.empty()) throw UsageError("--experiment operator-norm needs --center (a boundary point)");
  cfg.center = parse_point(c.center);
  const auto table = operator_norm_experiment(d, c.epsilon, c.delta, lambdas, cfg);
  auto meta = common_meta(c, d);
  meta.push_back({"epsilon", format_number(c.epsilon)});
  meta.push_back({"delta", format_number(c.delta)});
  meta.push_back({"lambda_max", format_number(table.lambda_max)});
  auto f = open_out(out_path(c, "_operator_norm.csv"));
  CsvWriter csv(f, "operator_norm", {"lambda", "lambda_over_max", "window_side", "function", "input_norm",
                                     "output_norm", "ratio", "filled", "resolution", "err_bound"}, meta);
  for (const auto& r : table.rows) {
    csv.cell(r.lambda).cell(r.lambda / table.lambda_max).cell(r.window_side).cell(r.function).cell(r.input_norm)
        .cell(r.output_norm).cell(na(r.ratio)).cell(r.filled).cell(r.h).cell("NA");
    csv.end_row();
  }
  for (std::size_t t = 0; t < lambdas.size(); ++t)
    std::cout << "lambda " << format_number(lambdas[t]) << ": max ratio " << na(table.max_ratio[t]) << "\n";
  return 0;
}

int run_counterexample(const ExperimentConfig& c) {
  const double lambda = c.lambda.empty() ? 2.0 : parse_value("--lambda", c.lambda);
  const double h = parse_h(c.resolution);
  std::vector<double> sizes;
  try {
    sizes = parse_list(c.windows);
  } catch (const IoError& e) {
    throw UsageError(std::string("--windows: ") + e.what());
  }
  for (const double r : sizes) pick_level(Window{{-r / 2, -r / 2}, r}, h);
  if (!(lambda > 1.0)) std::cerr << "note: lambda <= 1 is a control run\n";
  const auto rows = counterexample_experiment(sizes, lambda, h, c.epsilon, c.delta);
  auto f = open_out(out_path(c, "_counterexample.csv"));
  CsvWriter csv(f, "counterexample", {"window_size", "lambda", "input_norm", "output_norm", "ratio", "fallback_cubes",
                                      "filled", "resolution", "err_bound"},
                {{"domain", "intro_lipschitz"}, {"function", "max(x,0)"}});
  for (const auto& r : rows) {
    csv.cell(r.window_size).cell(r.lambda).cell(r.input_norm).cell(r.output_norm).cell(na(r.ratio))
        .cell(r.fallback_cubes).cell(r.filled).cell(r.h).cell("NA");
    csv.end_row();
    std::cout << "R " << format_number(r.window_size) << ": ratio " << na(r.ratio) << "\n";
  }
  return 0;
}

int run_extend(const ExperimentConfig& c) {
  if (c.experiment == "counterexample") return run_counterexample(c);
  const Domain d = load_domain(c);
  if (!(c.epsilon > 0.0) || !(c.delta > 0.0)) throw UsageError("--epsilon and --delta must be positive");
  if (c.experiment == "operator-norm") return run_operator_norm(c, d);
  if (c.experiment != "none") throw UsageError("unknown --experiment '" + c.experiment + "'");

  const Window w = pick_window(c, d);
  const double h = parse_h(c.resolution);
  const int level = pick_level(w, h);
  const double lm = lambda_max(std::min(c.epsilon, 1.0), std::min(c.delta, 1.0));
  const double lambda = c.lambda.empty() ? lm : parse_value("--lambda", c.lambda);
  if (lambda > lm)
    std::cerr << "warning: lambda " << format_number(lambda) << " exceeds lambda_max " << format_number(lm) << "\n";
  const auto dec = build_whitney(d, w, level);
  const auto f = make_function(c.function, d, w, level, c.seed);
  ExtensionOptions opt;
  opt.best_effort = c.best_effort;
  const auto ext = extend(f, d, dec, lambda, c.epsilon, c.delta, opt);
  write_extension(c, d, dec, ext);

  std::ostringstream txt;
  txt << "function: " << c.function << "\n"
      << "lambda: " << format_number(lambda) << " (lambda_max " << format_number(lm) << ")\n"
      << "assigned cubes: " << ext.assignment.size() << " (fallback " << ext.fallback_count << ")\n"
      << "zero cubes: " << ext.zero_region.size() << " (window edge " << ext.edge_zeroed << ")\n"
      << "filled cells: " << ext.filled_count << "\n"
      << "input norm: " << format_number(ext.input_norm) << "\n"
      << "output norm: " << format_number(ext.output_norm) << "\n"
      << "ratio: " << na(ext.ratio) << "\n";
  open_out(out_path(c, ".txt")) << txt.str();
  std::cout << txt.str();
  return 0;
}

// ---- report ----

struct Metric {
  std::string file, kind, metric;
  std::string value, resolution, err;
};

std::string column_or_na(const CsvTable& t, std::size_t row, const std::string& name) {
  for (const auto& c : t.columns)
    if (c == name) return t.text(row, name);
  return "NA";
}

std::vector<Metric> summarize(const std::string& file, const CsvTable& t) {
  std::vector<Metric> out;
  const std::string res = t.rows.empty() ? "NA" : column_or_na(t, 0, "resolution");
  auto add = [&](const std::string& metric, double v, const std::string& err = "NA") {
    out.push_back({file, t.kind, metric, na(v), res, err});
  };
  auto max_of = [&](const std::string& col) {
    double m = -INFINITY;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double v = t.number(r, col);
      if (std::isfinite(v)) m = std::max(m, v);
    }
    return m;
  };
  auto min_of = [&](const std::string& col) {
    double m = INFINITY;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double v = t.number(r, col);
      if (std::isfinite(v)) m = std::min(m, v);
    }
    return m;
  };
  add("rows", static_cast<double>(t.rows.size()));
  if (t.kind == "cubes") {
    std::map<std::string, int> count;
    for (std::size_t r = 0; r < t.rows.size(); ++r) ++count[t.text(r, "tag")];
    for (const auto& [tag, n] : count) add("count_" + tag, n);
    add("max_err_bound", max_of("err_bound"));
  } else if (t.kind == "geodesic") {
    for (std::size_t r = 0; r < t.rows.size(); ++r) add("k", t.number(r, "value"), t.text(r, "err_bound"));
  } else if (t.kind == "classify_pairs") {
    add("min_epsilon", min_of("epsilon"));
    double worst = 0.0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double k = t.number(r, "k");
      if (std::isfinite(k)) worst = std::max(worst, k / (t.number(r, "j") + 1));
    }
    add("max_k_over_j_plus_1", worst);
  } else if (t.kind == "norm") {
    for (std::size_t r = 0; r < t.rows.size(); ++r) add("bmo_lambda", t.number(r, "value"));
  } else if (t.kind == "assignment") {
    double fb = 0.0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) fb += t.number(r, "fallback");
    add("fallback_cubes", fb);
  } else if (t.kind == "operator_norm") {
    std::map<double, double> best;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double lam = t.number(r, "lambda"), ratio = t.number(r, "ratio");
      auto& b = best.try_emplace(lam, -INFINITY).first->second;
      if (std::isfinite(ratio)) b = std::max(b, ratio);
    }
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& [lam, b] : best) {
      add("max_ratio@" + format_number(lam), b);
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    add("max_ratio_spread", hi > 0 ? (hi - lo) / hi : NAN);
  } else if (t.kind == "counterexample") {
    bool increasing = true;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      add("ratio@" + t.text(r, "window_size"), t.number(r, "ratio"));
      if (r > 0 && !(t.number(r, "ratio") > t.number(r - 1, "ratio"))) increasing = false;
    }
    add("strictly_increasing", increasing ? 1.0 : 0.0);
  }
  return out;
}

int run_report(const ExperimentConfig& c) {
  const fs::path dir = c.dir.empty() ? fs::path(c.out) : fs::path(c.dir);
  if (!fs::is_directory(dir)) throw UsageError("--dir '" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const std::string own = stem(c) + ".csv";
  std::vector<Metric> metrics;
  for (const auto& p : files) {
    if (p.filename() == own) continue;
    std::ifstream in(p);
    std::string first;
    std::getline(in, first);
    if (first.rfind("# geobmo ", 0) != 0 || first == "# geobmo grid v1" || first == "# geobmo report v1") continue;
    const auto t = read_csv_file(p.string());
    for (auto& m : summarize(p.filename().string(), t)) metrics.push_back(std::move(m));
  }
  auto f = open_out(out_path(c, ".csv"));
  CsvWriter csv(f, "report", {"file", "kind", "metric", "value", "resolution", "err_bound"}, {{"dir", dir.string()}});
  for (const auto& m : metrics) {
    csv.cell(m.file).cell(m.kind).cell(m.metric).cell(m.value).cell(m.resolution).cell(m.err);
    csv.end_row();
    std::cout << m.file << "  " << m.metric << " = " << m.value << "\n";
  }
  return 0;
}

int dispatch(const ExperimentConfig& c) {
  if (c.subcommand != "report") fs::create_directories(c.out);
  if (c.subcommand == "decompose") return run_decompose(c);
  if (c.subcommand == "geodesic") return run_geodesic(c);
  if (c.subcommand == "classify") return run_classify(c);
  if (c.subcommand == "norm") return run_norm(c);
  if (c.subcommand == "extend") return run_extend(c);
  if (c.subcommand == "report") return run_report(c);
  throw UsageError("unknown subcommand '" + c.subcommand + "'");
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  CLI::App app{"geobmo: Whitney cubes, quasi-hyperbolic distances and bmo extension experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  const char* env_out = std::getenv("GEOBMO_OUT");
  cfg.out = env_out && *env_out ? env_out : "geobmo_out";
  app.add_option("-o,--out", cfg.out, "Output directory (default $GEOBMO_OUT or ./geobmo_out)");
  app.add_option("--name", cfg.name, "Output file stem (default: the subcommand)");
  app.add_option("--seed", cfg.seed, "Random seed");

  auto domain_opts = [&](CLI::App* s) {
    s->add_option("--domain", cfg.domain, "Builtin 'name:params' or a domain spec file")->capture_default_str();
    s->add_option("--resolution", cfg.resolution, "Grid step h, a dyadic fraction of the window side")->capture_default_str();
  };
  auto* dec = app.add_subcommand("decompose", "Whitney decomposition (CSV + SVG)");
  domain_opts(dec);
  dec->add_option("--window", cfg.window, "Window ox,oy,side");

  auto* geo = app.add_subcommand("geodesic", "Quasi-hyperbolic distance and geodesic");
  domain_opts(geo);
  geo->add_option("--from", cfg.from, "x,y")->required();
  geo->add_option("--to", cfg.to, "x,y")->required();

  auto* cls = app.add_subcommand("classify", "(eps, delta) and uniformity estimates");
  domain_opts(cls);
  cls->add_option("--delta", cfg.delta)->capture_default_str();
  cls->add_option("--budget", cfg.budget, "Random pairs")->capture_default_str();

  auto* nrm = app.add_subcommand("norm", "bmo_lambda and BMO norms of a grid function");
  domain_opts(nrm);
  nrm->add_option("--window", cfg.window, "Window ox,oy,side");
  nrm->add_option("--function", cfg.function, "constant:c | linear:a,b | posx | k:x,y | dipole:x1,y1;x2,y2;r1,r2 | cellwise[:seed] | grid file")
      ->capture_default_str();
  nrm->add_option("--lambda", cfg.lambda)->required();
  nrm->add_flag("--abc", cfg.abc, "Also compute the dyadic a, b, c data on the window");

  auto* ext = app.add_subcommand("extend", "Extension operator and its experiments");
  domain_opts(ext);
  ext->add_option("--window", cfg.window, "Window ox,oy,side");
  ext->add_option("--function", cfg.function)->capture_default_str();
  ext->add_option("--lambda", cfg.lambda, "Default: lambda_max(eps, delta)");
  ext->add_option("--epsilon", cfg.epsilon)->capture_default_str();
  ext->add_option("--delta", cfg.delta)->capture_default_str();
  ext->add_flag("--best-effort", cfg.best_effort, "Unmatched cubes take the nearest E cube");
  ext->add_option("--experiment", cfg.experiment, "none | operator-norm | counterexample")->capture_default_str();
  ext->add_option("--lambdas", cfg.lambdas, "operator-norm: list (default lambda_max, /2, /4)");
  ext->add_option("--center", cfg.center, "operator-norm: boundary point x,y the windows are centred on");
  ext->add_option("--span", cfg.span, "operator-norm: window side / lambda")->capture_default_str();
  ext->add_option("--level", cfg.level, "operator-norm: grid level")->capture_default_str();
  ext->add_option("--suite-size", cfg.suite_size)->capture_default_str();
  ext->add_option("--windows", cfg.windows, "counterexample: window sizes R")->capture_default_str();

  auto* rep = app.add_subcommand("report", "Aggregate the CSVs of a results directory");
  rep->add_option("--dir", cfg.dir, "Results directory (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cfg);
  } catch (const UsageError& e) {
    std::cerr << "geobmo: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "geobmo: " << cfg.subcommand << " failed: " << e.what() << "\n";
    return 1;
  }
}
