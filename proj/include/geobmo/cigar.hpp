#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geobmo/qhyper.hpp"

namespace geobmo {

class CigarError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Largest eps for which gamma is an eps-cigar curve for (x, y): the length
// quotient |x-y| / s(gamma) and the John quotient d(z)|x-y| / (|z-x||z-y|)
// minimised over z sampled at arclength fractions 1e-3 .. 1 - 1e-3; at most 1.
double curve_epsilon(const Domain& domain, Vec2 x, Vec2 y, const Polyline& gamma);

struct LengthCigar {
  double a = 1.0;  // s(gamma) / |x - y|
  double b = 0.0;  // max over z of min(s(gamma(x,z)), s(gamma(z,y))) / d(z)
};
LengthCigar curve_length_cigar(const Domain& domain, Vec2 x, Vec2 y, const Polyline& gamma);

// min(1/a, 1/(ab)), at most 1.
double epsilon_from_ab(double a, double b);

enum class Verdict { consistent, evidence_against, inconclusive };
const char* to_string(Verdict v);

struct PairRecord {
  Vec2 x, y;
  int sweep = -1;            // index into ClassificationReport::sweeps, -1 for random pairs
  int step = -1;             // position inside the sweep
  double epsilon = 0.0;      // best over the candidate curves
  double a = 0.0, b = 0.0;   // of the curve attaining epsilon
  double j = 0.0, k = 0.0;   // j and qh distance of (x, y)
  double k_err = 0.0;        // quadrature error bound of k
  bool flagged = false;      // no qh geodesic at this resolution
  Polyline witness;          // curve attaining epsilon
  Polyline geodesic;
  std::vector<std::pair<double, double>> jk;  // (j, k) of sub-pairs along the geodesic
};

// Pairs placed ever closer to one boundary feature.
struct FeatureSweep {
  std::string feature;
  Vec2 point;
  std::vector<double> distance;  // distance of both points to the feature point
  std::vector<double> epsilon;   // per-pair epsilon, by step
  std::vector<double> d;         // envelope offset k - c j of the step's sub-pairs
  bool epsilon_diverges = false;
  bool d_diverges = false;
};

struct ClassificationReport {
  std::string domain;
  double delta = 0.0;
  double resolution = 0.0;
  double epsilon_hat = 1.0;
  std::pair<double, double> ab_hat{1.0, 0.0};
  std::pair<double, double> cd_hat{0.0, 0.0};
  double prop26_constant = 0.0;  // max k / (j + 1) over the sampled pairs
  int pair_count = 0;
  int flagged = 0;
  std::vector<PairRecord> pairs;
  std::vector<int> worst_pairs;  // indices into pairs, smallest epsilon first
  std::vector<FeatureSweep> sweeps;
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
  // Filled by classify: the same estimates at half the resolution.
  double epsilon_hat_fine = 0.0;
  std::pair<double, double> ab_hat_fine{0.0, 0.0};
  std::pair<double, double> cd_hat_fine{0.0, 0.0};
};

struct UniformityFit {
  double c = 0.0, d = 0.0;
  std::size_t points = 0;
  double max_residual = 0.0;  // max of k - (c j + d) over the points (<= 0)
  double prop26_constant = 0.0;
  std::vector<std::pair<double, double>> jk;
};

inline constexpr int kSweepSteps = 6;

// Pair sampling: x uniform in {sd >= delta / 64} within the bounding box, y
// uniform in the disk of radius delta around x (same constraint), plus
// kSweepSteps pairs per boundary feature at feature distance delta / 4^(k+1).
// Pairs do not depend on the resolution.
std::vector<std::pair<Vec2, Vec2>> sample_pairs(const Domain& domain, double delta, int n_pairs,
                                                std::uint64_t seed);

ClassificationReport estimate_ed(const Domain& domain, double delta, int n_pairs,
                                 double resolution, std::uint64_t seed);

// Minimal-area (c, d) with c in {2^k / 8 : k = 0..10} and d = max(0, max(k - c j))
// over sub-pairs sampled at 9 points along each geodesic.
UniformityFit fit_envelope(const std::vector<std::pair<double, double>>& jk);
UniformityFit qh_uniformity_fit(const Domain& domain, double delta, int n_pairs,
                                double resolution, std::uint64_t seed);

// Runs the estimators at `resolution` and half of it.
ClassificationReport classify(const Domain& domain, double delta, int budget, double resolution,
                              std::uint64_t seed);

// |u - v| <= 0.2 max(|u|, |v|, floor)
bool stable(double u, double v, double floor = 0.0);

}  // namespace geobmo
