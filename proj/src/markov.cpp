#include "zenosde/markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zenosde/error.hpp"

namespace zenosde {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.empty()) throw Error(ErrorCode::NonSquare, std::string(what) + " is empty");
  for (const auto& row : m) {
    if (row.size() != m.size()) throw Error(ErrorCode::NonSquare, std::string(what) + " is not square");
  }
}

double row_scale(const std::vector<double>& row) {
  double s = 1.0;
  for (double v : row) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace

double GeneratorMatrix::jump_probability(int from, int to) const {
  if (from == to) return 0.0;
  double exit = exit_rate(from);
  return exit > 0.0 ? rate(from, to) / exit : 0.0;
}

GeneratorMatrix validate_generator(const Matrix& q) {
  require_square(q, "generator");
  for (std::size_t i = 0; i < q.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (!std::isfinite(q[i][j])) throw Error(ErrorCode::InvalidArgument, "generator entry is not finite");
      if (i != j && q[i][j] < 0.0) {
        throw Error(ErrorCode::NegativeOffDiagonal,
                    "q[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "] < 0");
      }
      sum += q[i][j];
    }
    if (std::abs(sum) > 1e-12 * row_scale(q[i])) {
      throw Error(ErrorCode::RowSumNonZero,
                  "row " + std::to_string(i + 1) + " sums to " + std::to_string(sum));
    }
    if (q[i][i] > 0.0) throw Error(ErrorCode::RowSumNonZero, "positive diagonal entry");
  }
  return GeneratorMatrix(q);
}

TransitionMatrix validate_transition(const std::vector<Matrix>& steps) {
  if (steps.empty()) throw Error(ErrorCode::InvalidArgument, "no transition matrices");
  for (const auto& p : steps) {
    require_square(p, "transition matrix");
    if (p.size() != steps.front().size()) {
      throw Error(ErrorCode::NonSquare, "per-step transition matrices differ in size");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      double sum = 0.0;
      for (double v : p[i]) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::NotStochastic, "entry outside [0, 1]");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(ErrorCode::NotStochastic, "row " + std::to_string(i + 1) + " does not sum to 1");
      }
    }
  }
  return TransitionMatrix(steps);
}

const Matrix& TransitionMatrix::at_step(long k) const {
  if (k < 1) return steps_.front();
  auto idx = std::min<std::size_t>(static_cast<std::size_t>(k - 1), steps_.size() - 1);
  return steps_[idx];
}

int ChainPath::state_at(double t) const {
  auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  return states[static_cast<std::size_t>(it - switch_times.begin())];
}

double sample_holding(const GeneratorMatrix& gen, int state, Rng& rng, int& next_state) {
  next_state = state;
  double exit = gen.exit_rate(state);
  if (exit <= 0.0) return std::numeric_limits<double>::infinity();
  double hold = std::exponential_distribution<double>(exit)(rng);
  double u = std::uniform_real_distribution<double>(0.0, exit)(rng);
  int n = static_cast<int>(gen.n_states());
  double acc = 0.0;
  int last_positive = state;
  for (int j = 1; j <= n; ++j) {
    if (j == state) continue;
    double r = gen.rate(state, j);
    if (r <= 0.0) continue;
    last_positive = j;
    acc += r;
    if (u < acc) {
      next_state = j;
      return hold;
    }
  }
  next_state = last_positive;
  return hold;
}

ChainPath sample_ctmc(const GeneratorMatrix& gen, int y0, double horizon, Rng& rng) {
  if (y0 < 1 || y0 > static_cast<int>(gen.n_states())) {
    throw Error(ErrorCode::IndexOutOfRange, "initial regime out of range");
  }
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  ChainPath path;
  path.horizon = horizon;
  path.states.push_back(y0);
  double t = 0.0;
  int state = y0;
  for (;;) {
    int next = state;
    double hold = sample_holding(gen, state, rng, next);
    t += hold;
    if (!(t < horizon)) break;
    path.switch_times.push_back(t);
    path.states.push_back(next);
    state = next;
  }
  return path;
}

int sample_dtmc_step(const TransitionMatrix& tm, int h, long k, Rng& rng) {
  int n = static_cast<int>(tm.n_states());
  if (h < 1 || h > n) throw Error(ErrorCode::IndexOutOfRange, "mark state " + std::to_string(h) + " out of range");
  const auto& row = tm.at_step(k)[h - 1];
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last_positive = h;
  for (int j = 0; j < n; ++j) {
    if (row[j] <= 0.0) continue;
    last_positive = j + 1;
    acc += row[j];
    if (u < acc) return j + 1;
  }
  return last_positive;
}

}  // namespace zenosde
