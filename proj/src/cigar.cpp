#include "geobmo/cigar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "geobmo/parallel.hpp"

namespace geobmo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kCurveSamples = 1000;
constexpr int kGeodesicPoints = 9;

void check_curve(const Domain& d, Vec2 x, Vec2 y, const Polyline& g) {
  if (x == y) throw CigarError("pair endpoints must differ");
  if (g.points.size() < 2) throw CigarError("curve needs at least two points");
  const double tol = 1e-9 * std::max(1.0, distance(x, y));
  if (distance(g.points.front(), x) > tol || distance(g.points.back(), y) > tol)
    throw CigarError("curve does not join the pair");
  for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
    if (!segment_inside(d, g.points[i], g.points[i + 1]))
      throw CigarError("invalid curve: leaves the domain");
}

// Points at arclength fractions i / n, i = 0..n, with their arclength.
std::vector<std::pair<Vec2, double>> arclength_samples(const Polyline& g, int n) {
  std::vector<double> cum(g.points.size(), 0.0);
  for (std::size_t i = 1; i < g.points.size(); ++i)
    cum[i] = cum[i - 1] + distance(g.points[i - 1], g.points[i]);
  const double total = cum.back();
  std::vector<std::pair<Vec2, double>> out;
  out.reserve(n + 1);
  std::size_t seg = 0;
  for (int i = 0; i <= n; ++i) {
    const double s = total * i / n;
    while (seg + 2 < g.points.size() && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    out.emplace_back(lerp(g.points[seg], g.points[seg + 1], t), s);
  }
  out.front().first = g.points.front();
  out.back().first = g.points.back();
  return out;
}

// The polyline cut at arclength fractions i / n.
std::vector<Polyline> split_even(const Polyline& g, int n) {
  std::vector<double> cum(g.points.size(), 0.0);
  for (std::size_t i = 1; i < g.points.size(); ++i)
    cum[i] = cum[i - 1] + distance(g.points[i - 1], g.points[i]);
  const double total = cum.back();
  std::vector<Polyline> pieces(n);
  std::size_t seg = 0;
  Vec2 start = g.points.front();
  for (int p = 0; p < n; ++p) {
    const double s_end = total * (p + 1) / n;
    Polyline& piece = pieces[p];
    piece.points.push_back(start);
    while (seg + 1 < g.points.size() - 1 && cum[seg + 1] < s_end) {
      ++seg;
      if (g.points[seg] != piece.points.back()) piece.points.push_back(g.points[seg]);
    }
    Vec2 end;
    if (p == n - 1) {
      end = g.points.back();
    } else {
      const double len = cum[seg + 1] - cum[seg];
      const double t = len > 0 ? std::clamp((s_end - cum[seg]) / len, 0.0, 1.0) : 0.0;
      end = lerp(g.points[seg], g.points[seg + 1], t);
    }
    piece.points.push_back(end);
    start = end;
  }
  return pieces;
}

Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

struct SweepPlan {
  int feature;
  int step;
  double distance;
};

std::vector<SweepPlan> sweep_plan(const Domain& d, double delta,
                                  std::vector<std::pair<Vec2, Vec2>>& pairs) {
  std::vector<SweepPlan> plan;
  const auto& feats = d.features();
  for (std::size_t f = 0; f < feats.size(); ++f) {
    const auto& ft = feats[f];
    const double base = std::atan2(ft.axis.y, ft.axis.x);
    for (int k = 0; k < kSweepSteps; ++k) {
      const double t = delta / std::pow(4.0, k + 1);
      const double beta = std::ldexp(1.0, -(k + 2));
      Vec2 x, y;
      if (ft.kind == BoundaryFeature::Kind::reflex) {
        x = ft.point + t * unit(base + ft.half_angle + beta);
        y = ft.point + t * unit(base - ft.half_angle - beta);
      } else {
        x = ft.point + t * unit(base);
        y = ft.point + 2 * t * unit(base);
      }
      if (!(d.signed_distance(x) > 0.0) || !(d.signed_distance(y) > 0.0)) continue;
      pairs.emplace_back(x, y);
      plan.push_back({static_cast<int>(f), k, t});
    }
  }
  return plan;
}

PairRecord evaluate_pair(const Domain& d, Vec2 x, Vec2 y, double resolution) {
  PairRecord r;
  r.x = x;
  r.y = y;
  r.j = j_distance(d, x, y);
  double best = -kInf;
  if (segment_inside(d, x, y)) {
    r.witness.points = {x, y};
    best = curve_epsilon(d, x, y, r.witness);
  }
  try {
    QhPath p = qh_distance(d, x, y, resolution);
    r.k = p.value;
    r.k_err = p.err;
    r.geodesic = std::move(p.geodesic);
  } catch (const QhError&) {
    r.flagged = true;
  }
  if (!r.flagged) {
    const double e = curve_epsilon(d, x, y, r.geodesic);
    if (e > best) {
      best = e;
      r.witness = r.geodesic;
    }
    const auto pieces = split_even(r.geodesic, kGeodesicPoints - 1);
    std::vector<double> piece_k(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) piece_k[i] = qh_length(d, pieces[i]).value;
    std::vector<Vec2> z(kGeodesicPoints);
    z[0] = pieces[0].points.front();
    for (std::size_t i = 0; i < pieces.size(); ++i) z[i + 1] = pieces[i].points.back();
    for (int i = 0; i < kGeodesicPoints; ++i) {
      double k = 0.0;
      for (int m = i + 1; m < kGeodesicPoints; ++m) {
        k += piece_k[m - 1];
        if (z[i] == z[m]) continue;
        r.jk.emplace_back(j_distance(d, z[i], z[m]), k);
      }
    }
  }
  if (best > -kInf) {
    r.epsilon = best;
    const auto ab = curve_length_cigar(d, x, y, r.witness);
    r.a = ab.a;
    r.b = ab.b;
  } else {
    r.epsilon = std::numeric_limits<double>::quiet_NaN();
    r.flagged = true;
  }
  return r;
}

// Strictly decreasing and ending below a quarter of the start.
bool decreasing_divergence(const std::vector<double>& v) {
  if (v.size() < 3) return false;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return v.back() < v.front() / 4;
}

// Strictly increasing with total growth above 2.
bool increasing_divergence(const std::vector<double>& v) {
  if (v.size() < 3) return false;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return v.back() - v.front() > 2.0;
}

double envelope_offset(const std::vector<std::pair<double, double>>& jk, double c) {
  double d = 0.0;
  for (const auto& [j, k] : jk) d = std::max(d, k - c * j);
  return d;
}

ClassificationReport run_estimates(const Domain& d, double delta, int n_pairs, double resolution,
                                   std::uint64_t seed) {
  if (n_pairs < 1) throw CigarError("need at least one pair");
  if (!(delta > 0.0)) throw CigarError("delta must be positive");
  auto pairs = sample_pairs(d, delta, n_pairs, seed);
  const std::size_t random_count = pairs.size();
  const auto plan = sweep_plan(d, delta, pairs);

  ClassificationReport rep;
  rep.domain = d.label();
  rep.delta = delta;
  rep.resolution = resolution;
  rep.pairs.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    rep.pairs[i] = evaluate_pair(d, pairs[i].first, pairs[i].second, resolution);
  });
  rep.pair_count = static_cast<int>(pairs.size());

  std::vector<std::pair<double, double>> all_jk;
  double a_hat = 1.0, b_hat = 0.0, eps_hat = 1.0;
  for (const auto& p : rep.pairs) {
    if (p.flagged) ++rep.flagged;
    if (std::isfinite(p.epsilon)) {
      eps_hat = std::min(eps_hat, p.epsilon);
      a_hat = std::max(a_hat, p.a);
      b_hat = std::max(b_hat, p.b);
    }
    if (!p.flagged) {
      rep.prop26_constant = std::max(rep.prop26_constant, p.k / (p.j + 1));
      all_jk.insert(all_jk.end(), p.jk.begin(), p.jk.end());
    }
  }
  rep.epsilon_hat = eps_hat;
  rep.ab_hat = {a_hat, b_hat};
  const auto fit = fit_envelope(all_jk);
  rep.cd_hat = {fit.c, fit.d};

  rep.worst_pairs.resize(rep.pairs.size());
  std::iota(rep.worst_pairs.begin(), rep.worst_pairs.end(), 0);
  std::erase_if(rep.worst_pairs, [&](int i) { return !std::isfinite(rep.pairs[i].epsilon); });
  std::stable_sort(rep.worst_pairs.begin(), rep.worst_pairs.end(),
                   [&](int a, int b) { return rep.pairs[a].epsilon < rep.pairs[b].epsilon; });
  if (rep.worst_pairs.size() > 5) rep.worst_pairs.resize(5);

  const auto& feats = d.features();
  std::vector<int> sweep_of(feats.size(), -1);
  for (std::size_t q = 0; q < plan.size(); ++q) {
    auto& pr = rep.pairs[random_count + q];
    int& s = sweep_of[plan[q].feature];
    if (s < 0) {
      s = static_cast<int>(rep.sweeps.size());
      FeatureSweep fs;
      fs.feature = feats[plan[q].feature].name;
      fs.point = feats[plan[q].feature].point;
      rep.sweeps.push_back(fs);
    }
    pr.sweep = s;
    pr.step = plan[q].step;
    auto& fs = rep.sweeps[s];
    fs.distance.push_back(plan[q].distance);
    fs.epsilon.push_back(pr.epsilon);
    fs.d.push_back(pr.flagged ? std::numeric_limits<double>::quiet_NaN()
                              : envelope_offset(pr.jk, fit.c));
  }
  for (auto& fs : rep.sweeps) {
    fs.epsilon_diverges = decreasing_divergence(fs.epsilon);
    fs.d_diverges = increasing_divergence(fs.d);
  }
  return rep;
}

}  // namespace

double curve_epsilon(const Domain& domain, Vec2 x, Vec2 y, const Polyline& gamma) {
  check_curve(domain, x, y, gamma);
  const double gap = distance(x, y);
  double eps = std::min(1.0, gap / gamma.euclidean_length());
  const auto samples = arclength_samples(gamma, kCurveSamples);
  for (int i = 1; i < kCurveSamples; ++i) {
    const Vec2 z = samples[i].first;
    const double den = distance(z, x) * distance(z, y);
    if (den <= 0.0) continue;
    eps = std::min(eps, domain.signed_distance(z) * gap / den);
  }
  return eps;
}

LengthCigar curve_length_cigar(const Domain& domain, Vec2 x, Vec2 y, const Polyline& gamma) {
  check_curve(domain, x, y, gamma);
  LengthCigar out;
  const double s = gamma.euclidean_length();
  out.a = s / distance(x, y);
  for (const auto& [z, sz] : arclength_samples(gamma, kCurveSamples)) {
    const double m = std::min(sz, s - sz);
    if (m <= 0.0) continue;
    out.b = std::max(out.b, m / domain.signed_distance(z));
  }
  return out;
}

double epsilon_from_ab(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw CigarError("a and b must be positive");
  if (a < 1.0) throw CigarError("a curve is never shorter than the chord (a >= 1)");
  return std::min({1.0, 1.0 / a, 1.0 / (a * b)});
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent-with-(ε,δ)";
    case Verdict::evidence_against: return "evidence-against";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

bool stable(double u, double v, double floor) {
  return std::abs(u - v) <= 0.2 * std::max({std::abs(u), std::abs(v), floor});
}

std::vector<std::pair<Vec2, Vec2>> sample_pairs(const Domain& domain, double delta, int n_pairs,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  const Box bb = domain.bounding_box();
  const double min_sd = delta / 64;
  std::vector<std::pair<Vec2, Vec2>> out;
  long tries = 0;
  while (static_cast<int>(out.size()) < n_pairs) {
    if (++tries > 1000L * n_pairs + 100000)
      throw CigarError("could not sample pairs: domain too thin for delta / 64 clearance");
    const Vec2 x{bb.lo.x + unit01(rng) * (bb.hi.x - bb.lo.x),
                 bb.lo.y + unit01(rng) * (bb.hi.y - bb.lo.y)};
    if (domain.signed_distance(x) < min_sd) continue;
    const double r = delta * std::sqrt(unit01(rng));
    const double th = 2 * M_PI * unit01(rng);
    const Vec2 y = x + r * unit(th);
    if (r <= 0.0 || domain.signed_distance(y) < min_sd) continue;
    out.emplace_back(x, y);
  }
  return out;
}

UniformityFit fit_envelope(const std::vector<std::pair<double, double>>& jk) {
  UniformityFit out;
  out.jk = jk;
  out.points = jk.size();
  double j_max = 0.0;
  for (const auto& [j, k] : jk) {
    j_max = std::max(j_max, j);
    out.prop26_constant = std::max(out.prop26_constant, k / (j + 1));
  }
  double best_area = kInf;
  for (int e = 0; e <= 10; ++e) {
    const double c = std::ldexp(1.0, e) / 8;
    const double d = envelope_offset(jk, c);
    // area under j -> c j + d over the observed j range
    const double area = c * j_max * j_max / 2 + d * j_max;
    if (area < best_area) {
      best_area = area;
      out.c = c;
      out.d = d;
    }
  }
  out.max_residual = -kInf;
  for (const auto& [j, k] : jk) out.max_residual = std::max(out.max_residual, k - (out.c * j + out.d));
  if (jk.empty()) out.max_residual = 0.0;
  return out;
}

ClassificationReport estimate_ed(const Domain& domain, double delta, int n_pairs,
                                 double resolution, std::uint64_t seed) {
  auto rep = run_estimates(domain, delta, n_pairs, resolution, seed);
  const bool against = std::any_of(rep.sweeps.begin(), rep.sweeps.end(),
                                    [](const FeatureSweep& s) { return s.epsilon_diverges; });
  rep.verdict = against ? Verdict::evidence_against : Verdict::inconclusive;
  rep.reason = against ? "per-pair epsilon diverges toward a boundary feature"
                       : "single resolution; stability not assessed";
  return rep;
}

UniformityFit qh_uniformity_fit(const Domain& domain, double delta, int n_pairs,
                                double resolution, std::uint64_t seed) {
  const auto rep = run_estimates(domain, delta, n_pairs, resolution, seed);
  std::vector<std::pair<double, double>> jk;
  for (const auto& p : rep.pairs)
    if (!p.flagged) jk.insert(jk.end(), p.jk.begin(), p.jk.end());
  auto fit = fit_envelope(jk);
  fit.prop26_constant = rep.prop26_constant;
  return fit;
}

ClassificationReport classify(const Domain& domain, double delta, int budget, double resolution,
                              std::uint64_t seed) {
  auto coarse = run_estimates(domain, delta, budget, resolution, seed);
  const auto fine = run_estimates(domain, delta, budget, resolution / 2, seed);
  coarse.epsilon_hat_fine = fine.epsilon_hat;
  coarse.ab_hat_fine = fine.ab_hat;
  coarse.cd_hat_fine = fine.cd_hat;

  std::ostringstream why;
  bool against = false;
  for (std::size_t s = 0; s < coarse.sweeps.size() && s < fine.sweeps.size(); ++s) {
    const auto& a = coarse.sweeps[s];
    const auto& b = fine.sweeps[s];
    if (a.epsilon_diverges && b.epsilon_diverges) {
      against = true;
      why << "epsilon diverges at " << a.feature << "; ";
    }
    if (a.d_diverges && b.d_diverges) {
      against = true;
      why << "envelope offset d diverges at " << a.feature << "; ";
    }
  }
  if (against) {
    coarse.verdict = Verdict::evidence_against;
  } else {
    const bool eps_ok = stable(coarse.epsilon_hat, fine.epsilon_hat);
    const bool a_ok = stable(coarse.ab_hat.first, fine.ab_hat.first);
    const bool b_ok = stable(coarse.ab_hat.second, fine.ab_hat.second);
    const bool c_ok = stable(coarse.cd_hat.first, fine.cd_hat.first);
    const bool d_ok = stable(coarse.cd_hat.second, fine.cd_hat.second, 1.0);
    const bool clean = coarse.flagged == 0 && fine.flagged == 0;
    if (eps_ok && a_ok && b_ok && c_ok && d_ok && clean) {
      coarse.verdict = Verdict::consistent;
      why << "all estimators agree within 20% at h and h/2";
    } else {
      coarse.verdict = Verdict::inconclusive;
      if (!clean) why << "flagged pairs; ";
      if (!eps_ok) why << "epsilon unstable; ";
      if (!a_ok || !b_ok) why << "(a,b) unstable; ";
      if (!c_ok || !d_ok) why << "(c,d) unstable; ";
    }
  }
  coarse.reason = why.str();
  if (coarse.reason.ends_with("; ")) coarse.reason.resize(coarse.reason.size() - 2);
  return coarse;
}

}  // namespace geobmo
