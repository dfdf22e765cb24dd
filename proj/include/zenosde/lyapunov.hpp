#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zenosde/simulate.hpp"
#include "zenosde/system.hpp"

namespace zenosde {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  double ci_low(double z = 1.96) const { return mean - z * std_error; }
  double ci_high(double z = 1.96) const { return mean + z * std_error; }
};

using ScalarField = std::function<double(double t, int y, int h, std::span<const double> x)>;

/// User-supplied test function U(t, y, h, x). Derivatives are optional;
/// operators that need a missing one throw MissingDerivatives.
struct SmoothFunction {
  ScalarField value;
  ScalarField time_derivative;
  std::function<std::vector<double>(double, int, int, std::span<const double>)> gradient;
  std::function<Matrix(double, int, int, std::span<const double>)> hessian;
};

/// Lyapunov / test function family.
///   power:     v = gamma * y * ||x||^beta
///   quadratic: v = c * ||x||^2
///   custom:    any SmoothFunction
class LyapunovSpec {
 public:
  enum class Kind { Power, Quadratic, Custom };

  static LyapunovSpec power(double gamma, double beta);
  static LyapunovSpec quadratic(double c);
  static LyapunovSpec custom(SmoothFunction f);

  Kind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  double beta() const { return beta_; }
  double coefficient() const { return c_; }

  double value(double t, int y, int h, std::span<const double> x) const;
  double time_derivative(double t, int y, int h, std::span<const double> x) const;
  std::vector<double> gradient(double t, int y, int h, std::span<const double> x) const;
  Matrix hessian(double t, int y, int h, std::span<const double> x) const;

  /// inf of v over ||x|| >= r (all regimes and marks); closed form for power
  /// and quadratic kinds only.
  double infimum_outside(double r, std::size_t n_regimes) const;
  /// sup of v over ||x|| <= r.
  double supremum_inside(double r, std::size_t n_regimes) const;

 private:
  Kind kind_ = Kind::Quadratic;
  double gamma_ = 1.0;
  double beta_ = 2.0;
  double c_ = 1.0;
  SmoothFunction custom_;
};

/// The four parts of the weak infinitesimal operator.
struct WioTerms {
  double time = 0.0;
  double diffusion = 0.0;  // (grad U, a) + 1/2 tr(hess U b b^T)
  double switching = 0.0;  // sum_j q_yj [U(y_j, kernel(x)) - U(y, x)]
  double impulse = 0.0;    // only at scheduled jump times
  double total() const { return time + diffusion + switching + impulse; }
};

WioTerms wio_terms(const Simulator& sim, const LyapunovSpec& U, double t, int y, int h, std::span<const double> x);
double wio_evaluate(const Simulator& sim, const LyapunovSpec& U, double t, int y, int h, std::span<const double> x);
double wio_evaluate(const SystemSpec& spec, const LyapunovSpec& U, double t, int y, int h,
                    std::span<const double> x);

/// Monte Carlo difference quotient (E U(t + dt, state(t + dt)) - U(t, y, h, x)) / dt,
/// one Euler-Maruyama step per sample. For use as an independent check of
/// wio_evaluate away from jump times.
Estimate wio_finite_difference_oracle(const SystemSpec& spec, const LyapunovSpec& U, double t, int y, int h,
                                      std::span<const double> x, std::size_t mc, double dt,
                                      const RngPolicy& policy);

/// E v(tau_{k+1}, state after the jump at tau_{k+1}) - v(tau_k, y, h, x), starting
/// from (y, h, x) at the skeleton time tau_k (tau_0 = 0).
Estimate discrete_lyapunov_operator(const Simulator& sim, const LyapunovSpec& v, int y, int h,
                                    std::span<const double> x, std::size_t k, std::size_t mc,
                                    const RngPolicy& policy);

struct JumpMomentPoint {
  long k = 0;
  int y = 1;
  int h = 1;
  double x = 0.0;
  double ratio = 0.0;  // sum_z P(h, z) ||x + g(k, y, z, x)||^beta / ||x||^beta
};

struct JumpMomentResult {
  bool pass = true;
  double beta = 0.0;
  long k_max = 0;
  JumpMomentPoint worst;
  std::optional<JumpMomentPoint> first_violation;  // smallest k
};

/// Grid points are magnitudes; the state is x * (1, ..., 1).
JumpMomentResult check_jump_moment_condition(const SystemSpec& spec, double beta, long k_max, std::span<const double> x_grid);

std::vector<double> log_grid(double lo, double hi, std::size_t n);

struct StabilityTestRow {
  int regime = 1;
  double drift = 0.0;
  double diffusion = 0.0;
  double margin = 0.0;  // a_i - b_i^2 / 2, must be < -eps
  bool margin_pass = false;
  double switching_sum = 0.0;  // sum_{j > i} (j - i) q_ij with q_ij = -q~_ij / q~_ii
  double rhs = 0.0;            // i (beta eps + 2) / 2
  bool switching_pass = false;
  bool drift_pass = false;
};

struct StabilityTestOptions {
  std::optional<double> epsilon;  // default 0.1 unless search is set
  bool search = false;            // largest eps on eps_grid with every margin < -eps
  std::vector<double> eps_grid = log_grid(1e-6, 10.0, 71);
  std::vector<double> x_grid = log_grid(1e-3, 1e3, 61);
  long k_max = 0;  // 0: the schedule's k_max
};

struct StabilityTestReport {
  double epsilon = 0.0;
  bool epsilon_searched = false;
  bool epsilon_feasible = true;
  double b_max = 0.0;
  double beta = 0.0;
  std::vector<StabilityTestRow> rows;
  JumpMomentResult jump_moment;
  bool pass = false;
};

StabilityTestReport stability_test(const SystemSpec& spec, const StabilityTestOptions& opts = {});

struct QuadraticBounds {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = std::numeric_limits<double>::quiet_NaN();
  double c4 = std::numeric_limits<double>::quiet_NaN();
};

struct GridPoint {
  int y = 1;
  int h = 1;
  std::vector<double> x;
};

struct QuadraticBoundsResult {
  bool ok = false;
  QuadraticBounds bounds;
  std::string reason;
  std::optional<GridPoint> witness;
  double witness_ratio = 0.0;
};

/// Points x = r * (1, ..., 1) / sqrt(dim) for r on a log grid, every regime and mark.
std::vector<GridPoint> radial_grid(std::size_t n_regimes, std::size_t n_marks, std::size_t dim, double r_min,
                                   double r_max, std::size_t n);

/// Fits c1 ||x||^2 <= v <= c2 ||x||^2 (and c3, c4 for `companion` when given)
/// over the grid. A finite grid always admits constants, so a function whose
/// log-log growth rate between the smallest and largest radius differs from 2
/// is reported as having no quadratic sandwich, with the extreme point as witness.
QuadraticBoundsResult check_quadratic_bounds(const LyapunovSpec& v, const LyapunovSpec* companion,
                                             std::span<const GridPoint> grid, double t = 0.0);

}  // namespace zenosde
