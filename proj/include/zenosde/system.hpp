#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zenosde/markov.hpp"

namespace zenosde {

/// Drift or diffusion coefficients, one scalar per regime.
///   linear:   a(y, x) = a_y * x,   b(y, x) = b_y * diag(x)
///   constant: a(y, x) = a_y * 1,   b(y, x) = b_y * I
/// Diffusion is always diagonal: component j is driven by its own Wiener process.
struct CoefficientFamily {
  enum class Kind { Linear, Constant };

  Kind kind = Kind::Linear;
  std::vector<double> coefficients;

  std::size_t n_regimes() const { return coefficients.size(); }
  double coefficient(int regime) const { return coefficients[static_cast<std::size_t>(regime - 1)]; }
  bool is_linear() const { return kind == Kind::Linear; }
};

/// Per-index affine impulse used by the custom-sequence family:
/// g_k(x) = slope * x + offset (componentwise).
struct JumpMap {
  long k = 1;
  double slope = 0.0;
  double offset = 0.0;
};

/// Impulse function g(t_k, y, eta, x); the post-jump state is x + g.
///   zero:             g = 0
///   scale-poly:       g = k^2 * x
///   exp-mark-clamped: g = scale * exp(sign * alpha * k * eta) * sat(x)
///   custom-sequence:  g = slope_k * x + offset_k
/// sat clips each component to [-1, 1]; on nonnegative states it is min(x, 1).
struct JumpFamily {
  enum class Kind { Zero, ScalePoly, ExpMarkClamped, CustomSequence };

  Kind kind = Kind::Zero;
  double alpha = 1.0;
  double scale = 1.0;
  int sign = -1;
  std::vector<JumpMap> maps;
  // Required for custom-sequence when constants are derived; index k - 1.
  std::optional<std::vector<double>> lipschitz_seq;
  std::optional<std::vector<double>> sup_seq;

  /// x <- x + g(k, y, mark, x)
  void apply(long k, int regime, double mark_value, std::span<double> x) const;
  /// log ||x + g(k, y, mark, x)||, finite even when the post-jump state
  /// itself would overflow.
  double log_norm_after(long k, int regime, double mark_value, std::span<const double> x) const;
};

/// Jump-time generator. Truncation keeps jump k only when k <= k_max and it
/// is at least delta_min away from the previously kept jump (index order).
struct JumpSchedule {
  enum class Kind { ExplicitList, HarmonicToPoint, HarmonicToZero };

  Kind kind = Kind::HarmonicToPoint;
  std::vector<double> times;  // explicit-list
  double t_star = 2.0;        // harmonic-to-point: t_k = t_star - c / k
  double c = 1.0;
  double alpha = 1.0;         // harmonic-to-zero: t_k = alpha / k
  long k_max = 200;
  double delta_min = 1e-9;

  bool accumulating() const { return kind != Kind::ExplicitList; }
  /// Concentration point of the untruncated sequence (NaN for explicit lists).
  double concentration_point() const;
};

struct ScheduledJump {
  long k = 0;
  double t = 0.0;
};

struct Schedule {
  std::vector<ScheduledJump> jumps;  // ascending in t
  std::size_t truncated = 0;
};

/// Affine map applied to x when the regime switches from `from` to `to`.
/// Pairs without a rule leave x unchanged.
struct SwitchRule {
  int from = 1;
  int to = 1;
  double scale = 1.0;
  double shift = 0.0;
};

struct SystemSpec {
  CoefficientFamily drift;
  CoefficientFamily diffusion;
  JumpFamily jump;
  JumpSchedule schedule;
  GeneratorMatrix xi = validate_generator({{0.0}});
  TransitionMatrix eta = validate_transition(Matrix{{1.0}});
  std::vector<double> mark_values;  // empty: mark h has value h
  std::vector<SwitchRule> switch_kernel;
  std::vector<double> x0{0.0};
  int y0 = 1;
  int h0 = 1;

  std::size_t dim() const { return x0.size(); }
  std::size_t n_regimes() const { return xi.n_states(); }
  std::size_t n_marks() const { return eta.n_states(); }
  double mark_value(int h) const;
  const SwitchRule* switch_rule(int from, int to) const;

  /// Throws ConfigInvalid when the pieces do not fit together.
  void validate() const;
};

/// A nonnegative sequence indexed from k = 1 with its series.
struct Sequence {
  std::function<double(long)> term;
  std::function<double(long)> tail;  // sum over m >= k; empty when only numeric summation applies
  double sum = 0.0;                  // +inf when divergent

  bool divergent() const { return !std::isfinite(sum); }
};

/// Constants of the growth and Lipschitz conditions, all in squared form:
/// ||a||^2 + ||b||^2 + ||g||^2 <= C (1 + ||x||^2),
/// ||a(x1) - a(x2)||^2 + ||b(x1) - b(x2)||^2 <= L ||x1 - x2||^2,
/// ||g_k(x1) - g_k(x2)||^2 <= L_k ||x1 - x2||^2, gamma_k = sup ||g_k||.
struct DerivedConstants {
  double C = 0.0;
  double L = 0.0;
  Sequence lipschitz;  // L_k
  Sequence sup_norm;   // gamma_k
};

struct ConditionCheck {
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct EpsilonRow {
  double eps = 0.0;
  long n_eps = 0;
  double value = 0.0;  // ln(eps) + N_eps * sum_{k <= N_eps} L_k
};

struct ConditionReport {
  DerivedConstants constants;
  ConditionCheck growth;             // C finite
  ConditionCheck lipschitz;          // L finite
  ConditionCheck jump_lipschitz;     // sum L_k finite
  ConditionCheck jump_summability;   // sum gamma_k finite
  std::vector<EpsilonRow> eps_table; // ordered by decreasing eps
  ConditionCheck eps_trend;          // strictly decreasing as eps decreases

  bool all_pass() const {
    return growth.pass && lipschitz.pass && jump_lipschitz.pass && jump_summability.pass && eps_trend.pass;
  }
};

DerivedConstants derive_constants(const SystemSpec& spec);

/// Default grid {1e-1, ..., 1e-6}.
std::vector<double> default_eps_grid();

ConditionReport check_conditions(const SystemSpec& spec, std::span<const double> eps_grid);

/// Least k >= 1 with sum_{m >= k} gamma_m < eps.
long n_epsilon(const Sequence& gamma, double eps);

Schedule generate_schedule(const JumpSchedule& schedule);

/// Schedule actually realised by a system: like generate_schedule, except an
/// explicitly empty list means "no impulses" instead of an error.
Schedule realised_schedule(const SystemSpec& spec);

}  // namespace zenosde
