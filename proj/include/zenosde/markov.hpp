#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "zenosde/rng.hpp"

namespace zenosde {

using Matrix = std::vector<std::vector<double>>;

// Regimes and marks are labelled 1..n throughout the public API; the label is
// also the numeric value the power Lyapunov function multiplies by.

/// Rate matrix of a finite continuous-time Markov chain. Construct through
/// validate_generator; an instance always satisfies the generator invariants.
class GeneratorMatrix {
 public:
  std::size_t n_states() const { return q_.size(); }
  const Matrix& rates() const { return q_; }
  double rate(int from, int to) const { return q_[from - 1][to - 1]; }
  /// Total exit rate -q_ii of state `from`.
  double exit_rate(int from) const { return -q_[from - 1][from - 1]; }
  /// Jump-chain probability q_ij / (-q_ii); zero for absorbing states.
  double jump_probability(int from, int to) const;

  friend GeneratorMatrix validate_generator(const Matrix& q);

 private:
  explicit GeneratorMatrix(Matrix q) : q_(std::move(q)) {}
  Matrix q_;
};

/// Row-stochastic matrices for the mark chain. Step k (k >= 1) uses
/// matrices[k - 1]; steps past the end reuse the last matrix, so a single
/// matrix is the time-homogeneous case.
class TransitionMatrix {
 public:
  std::size_t n_states() const { return steps_.front().size(); }
  std::size_t n_steps() const { return steps_.size(); }
  const Matrix& at_step(long k) const;
  const std::vector<Matrix>& steps() const { return steps_; }

  friend TransitionMatrix validate_transition(const std::vector<Matrix>& steps);

 private:
  explicit TransitionMatrix(std::vector<Matrix> steps) : steps_(std::move(steps)) {}
  std::vector<Matrix> steps_;
};

/// Piecewise-constant, right-continuous regime path on [start, horizon].
/// states[0] holds on [start, switch_times[0]); states[i + 1] from switch_times[i].
struct ChainPath {
  double start = 0.0;
  double horizon = 0.0;
  std::vector<double> switch_times;
  std::vector<int> states;

  int state_at(double t) const;
};

GeneratorMatrix validate_generator(const Matrix& q);
TransitionMatrix validate_transition(const std::vector<Matrix>& steps);
inline TransitionMatrix validate_transition(const Matrix& p) { return validate_transition(std::vector<Matrix>{p}); }

/// Exact (holding-time) sampler for a single transition out of `state`.
/// Returns the holding time (infinity for absorbing states) and writes the
/// destination state.
double sample_holding(const GeneratorMatrix& gen, int state, Rng& rng, int& next_state);

ChainPath sample_ctmc(const GeneratorMatrix& gen, int y0, double horizon, Rng& rng);

int sample_dtmc_step(const TransitionMatrix& tm, int h, long k, Rng& rng);

}  // namespace zenosde
