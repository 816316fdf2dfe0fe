#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "geobmo/bmo.hpp"
#include "geobmo/grid_function.hpp"
#include "geobmo/whitney.hpp"

namespace geobmo {

// Raised when required E' cubes have no matching cube; lists them.
class ExtensionError : public std::runtime_error {
 public:
  ExtensionError(const std::string& what, std::vector<DyadicCube> cubes)
      : std::runtime_error(what), cubes_(std::move(cubes)) {}
  const std::vector<DyadicCube>& cubes() const { return cubes_; }

 private:
  std::vector<DyadicCube> cubes_;
};

// eps^2 delta / (320 n (1 + sqrt(n) eps)), for 0 < eps, delta <= 1.
double lambda_max(double epsilon, double delta, int n = kDim);

struct ExtensionOptions {
  // Unmatched cubes take the nearest E cube instead of failing.
  bool best_effort = false;
  // Compute input_norm, output_norm and ratio.
  bool norms = true;
};

struct Assignment {
  int cube = -1;    // E' cube, index into the decomposition
  int source = -1;  // chosen Q*
  double value = 0.0;
  double distance = 0.0;
  bool fallback = false;  // nearest E cube rather than a matching cube
};

struct ExtensionResult {
  GridFunction extended;
  std::vector<Assignment> assignment;  // E' cubes with l(Q) <= lambda, index order
  std::vector<int> zero_region;        // E' cubes set to 0
  std::vector<std::uint8_t> filled;    // per cell: copied from the nearest valued cell
  std::size_t filled_count = 0;
  std::size_t fallback_count = 0;
  std::size_t edge_zeroed = 0;  // unmatched cubes on the window edge, set to 0
  double lambda = 0.0;
  double lambda_max = 0.0;
  bool above_lambda_max = false;
  double input_norm = 0.0;   // bmo_lambda of Omega in the window
  double output_norm = 0.0;  // bmo_lambda of the window
  double ratio = std::numeric_limits<double>::quiet_NaN();  // NaN when input_norm is 0
};

// T_lambda f on the grid of f: f on inside cells, f_{Q*} on E' cubes with
// l(Q) <= lambda, 0 on the other E' cubes, nearest value elsewhere.
ExtensionResult extend(const GridFunction& f, const Domain& domain, const WhitneyDecomposition& dec,
                       double lambda, double epsilon, double delta,
                       const ExtensionOptions& options = {});

// max over E and E' cubes of |g_Q| / (1 + log_+(lambda / l(Q))).
double extension_log_growth(const GridFunction& g, const WhitneyDecomposition& dec, double lambda);

struct SuiteFunction {
  std::string name;
  GridFunction values;
};

// `count` functions cycling through constants, k(a, .), dipoles and
// Whitney-cellwise random functions, all on the level grid of dec's window.
std::vector<SuiteFunction> standard_suite(const Domain& domain, const WhitneyDecomposition& dec,
                                          int level, std::size_t count, std::uint64_t seed);

struct OperatorNormRow {
  double lambda = 0.0;
  double window_side = 0.0;
  std::string function;
  double h = 0.0;
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;  // NaN for a zero input
  std::size_t filled = 0;
  bool subsampled = false;
};

struct OperatorNormTable {
  double lambda_max = 0.0;
  std::vector<OperatorNormRow> rows;
  std::vector<double> max_ratio;  // per lambda, NaN rows skipped
};

OperatorNormTable operator_norm_experiment(const Domain& domain, const WhitneyDecomposition& dec,
                                           double epsilon, double delta,
                                           const std::vector<double>& lambdas,
                                           const std::vector<SuiteFunction>& suite);

// Windows that scale with lambda: side span * lambda centred at `center`, the
// same grid level and a suite drawn with the same seed for every lambda.
struct LocalWindowConfig {
  Vec2 center;
  double span = 32.0;
  int level = 9;
  std::size_t suite_size = 20;
  std::uint64_t seed = 1;
};

OperatorNormTable operator_norm_experiment(const Domain& domain, double epsilon, double delta,
                                           const std::vector<double>& lambdas,
                                           const LocalWindowConfig& config);

struct CounterexampleRow {
  double window_size = 0.0;
  double lambda = 0.0;
  double h = 0.0;
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;  // NaN for a zero input
  std::size_t fallback_cubes = 0;
  std::size_t filled = 0;
};

// intro_lipschitz in the windows [-R/2, R/2]^2; best-effort extension of f.
std::vector<CounterexampleRow> counterexample_experiment(
    const std::vector<double>& window_sizes, double lambda, double resolution, double epsilon,
    double delta, const std::function<double(Vec2)>& f = [](Vec2 p) { return p.x > 0 ? p.x : 0.0; });

}  // namespace geobmo
