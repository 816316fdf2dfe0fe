#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "geobmo/grid_function.hpp"
#include "geobmo/qhyper.hpp"
#include "geobmo/whitney.hpp"

namespace geobmo {

double cube_average(const GridFunction& f, const DyadicCube& q);
// Mean absolute deviation from the cube average.
double cube_oscillation(const GridFunction& f, const DyadicCube& q);

struct NormReport {
  double value = 0.0;
  double small_scale_part = 0.0;  // sup of oscillations, l(Q) < lambda
  double large_scale_part = 0.0;  // sup of the mean of |f|, l(Q) >= lambda
  double lambda = 0.0;
  std::optional<DyadicCube> attaining_cube;  // of the larger part
  std::optional<DyadicCube> small_cube, large_cube;
  struct Abc {
    double a = 0.0, b = 0.0, c = 0.0;
  };
  std::optional<Abc> abc;
  std::int64_t cubes = 0;        // cubes swept
  double excluded_fraction = 0;  // straddling cells of the grid
  bool degenerate = false;       // no cube with l(Q) >= lambda fits
  bool subsampled = false;       // evaluation cap hit, some levels skipped
};

// Evaluation cap (cells visited by oscillation sums) for one sweep.
inline constexpr std::int64_t kSweepCap = std::int64_t{1} << 26;

// Dyadic bmo_lambda(Omega): sup over grid-aligned dyadic Q in Omega of the
// oscillation for l(Q) < lambda plus sup of the mean of |f| for l(Q) >= lambda.
NormReport bmo_lambda_norm(const GridFunction& f, const Domain& domain, double lambda);
// Dyadic BMO(Omega): oscillation sup over every dyadic Q in Omega.
NormReport bmo_homogeneous_norm(const GridFunction& f, const Domain& domain);
// Dyadic bmo_lambda of the window: every window cube with a counted cell.
NormReport bmo_window_norm(const GridFunction& f, double lambda);
// a_f (oscillation sup over all window cubes), b_f (equal-size touching pairs),
// c_f (mean of |f| over l(Q) >= lambda / (16 sqrt n)), plus the direct window sweep.
NormReport bmo_rn_abc(const GridFunction& f, double lambda);

// k(a, .) at the inside cells of the grid of domain_window(domain) at `resolution`.
GridFunction gen_qh_function(const Domain& domain, Vec2 a, double resolution);
// Same on the level grid of an arbitrary window; paths stay inside the window.
GridFunction gen_qh_function(const Domain& domain, const Window& w, int level, Vec2 a);
// max(R1 - k(z1, .), 0) - max(R2 - k(z2, .), 0).
GridFunction gen_dipole(const Domain& domain, Vec2 z1, Vec2 z2, double r1, double r2,
                        double resolution);
GridFunction gen_dipole(const Domain& domain, const Window& w, int level, Vec2 z1, Vec2 z2,
                        double r1, double r2);
// Piecewise constant on E cubes: v(Q) = hops(Q, root) / 2 + u_Q / 4 with a random
// root cube and u_Q uniform in [-1, 1] on multiples of 2^-10, so adjacent cubes
// differ by at most 1. Inside cells outside every E cube take the value of the
// first E neighbour of their frontier cell.
GridFunction gen_cellwise_random(const Domain& domain, const WhitneyDecomposition& dec,
                                 int level, std::uint64_t seed);

// max over E cubes of |f_Q| / (1 + log_+(lambda / l(Q))).
double check_log_growth(const GridFunction& f, const WhitneyDecomposition& dec, double lambda);
// max of |f_Q1 - f_Q2| over adjacent E cubes.
double check_adjacent_averages(const GridFunction& f, const WhitneyDecomposition& dec);

}  // namespace geobmo
