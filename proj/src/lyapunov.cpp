#include "zenosde/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "zenosde/error.hpp"

namespace zenosde {

namespace {

constexpr std::uint64_t kWioDomain = 0x57494f;        // finite-difference oracle
constexpr std::uint64_t kDiscreteDomain = 0x444c4f;   // discrete Lyapunov operator
constexpr std::size_t kBlock = 4096;                  // samples sharing one stream set

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::MissingDerivatives, what);
}

// Running mean / variance in insertion order.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  Estimate estimate(double scale = 1.0) const {
    Estimate e;
    e.n = n;
    if (n == 0) return e;
    double mean = sum / static_cast<double>(n);
    e.mean = mean * scale;
    if (n > 1) {
      double var = std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
      e.std_error = std::sqrt(var / static_cast<double>(n)) * std::abs(scale);
    }
    return e;
  }
};

const ScheduledJump* jump_at(const Schedule& schedule, double t) {
  for (const auto& j : schedule.jumps) {
    if (std::abs(j.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return &j;
  }
  return nullptr;
}

}  // namespace

LyapunovSpec LyapunovSpec::power(double gamma, double beta) {
  if (!(gamma > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "power function needs gamma, beta > 0");
  LyapunovSpec s;
  s.kind_ = Kind::Power;
  s.gamma_ = gamma;
  s.beta_ = beta;
  return s;
}

LyapunovSpec LyapunovSpec::quadratic(double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadratic function needs c > 0");
  LyapunovSpec s;
  s.kind_ = Kind::Quadratic;
  s.c_ = c;
  return s;
}

LyapunovSpec LyapunovSpec::custom(SmoothFunction f) {
  if (!f.value) throw Error(ErrorCode::InvalidArgument, "custom function needs a value callback");
  LyapunovSpec s;
  s.kind_ = Kind::Custom;
  s.custom_ = std::move(f);
  return s;
}

double LyapunovSpec::value(double t, int y, int h, std::span<const double> x) const {
  switch (kind_) {
    case Kind::Power: return gamma_ * y * std::pow(squared_norm(x), 0.5 * beta_);
    case Kind::Quadratic: return c_ * squared_norm(x);
    case Kind::Custom: return custom_.value(t, y, h, x);
  }
  return 0.0;
}

double LyapunovSpec::time_derivative(double t, int y, int h, std::span<const double> x) const {
  if (kind_ != Kind::Custom) return 0.0;
  require(static_cast<bool>(custom_.time_derivative), "custom function has no time derivative");
  return custom_.time_derivative(t, y, h, x);
}

std::vector<double> LyapunovSpec::gradient(double t, int y, int h, std::span<const double> x) const {
  std::vector<double> g(x.begin(), x.end());
  switch (kind_) {
    case Kind::Power: {
      double r2 = squared_norm(x);
      double f = r2 > 0.0 ? gamma_ * y * beta_ * std::pow(r2, 0.5 * beta_ - 1.0) : 0.0;
      for (double& v : g) v *= f;
      return g;
    }
    case Kind::Quadratic:
      for (double& v : g) v *= 2.0 * c_;
      return g;
    case Kind::Custom:
      require(static_cast<bool>(custom_.gradient), "custom function has no gradient");
      return custom_.gradient(t, y, h, x);
  }
  return g;
}

Matrix LyapunovSpec::hessian(double t, int y, int h, std::span<const double> x) const {
  const std::size_t m = x.size();
  Matrix hess(m, std::vector<double>(m, 0.0));
  switch (kind_) {
    case Kind::Power: {
      double r2 = squared_norm(x);
      if (r2 == 0.0) return hess;  // singular at the origin for beta < 2
      double f = gamma_ * y * beta_ * std::pow(r2, 0.5 * beta_ - 1.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          hess[i][j] = f * ((i == j ? 1.0 : 0.0) + (beta_ - 2.0) * x[i] * x[j] / r2);
        }
      }
      return hess;
    }
    case Kind::Quadratic:
      for (std::size_t i = 0; i < m; ++i) hess[i][i] = 2.0 * c_;
      return hess;
    case Kind::Custom:
      require(static_cast<bool>(custom_.hessian), "custom function has no Hessian");
      return custom_.hessian(t, y, h, x);
  }
  return hess;
}

double LyapunovSpec::infimum_outside(double r, std::size_t /*n_regimes*/) const {
  switch (kind_) {
    case Kind::Power: return gamma_ * std::pow(r, beta_);
    case Kind::Quadratic: return c_ * r * r;
    case Kind::Custom: break;
  }
  throw Error(ErrorCode::UnsupportedFamily, "radial bounds need a power or quadratic function");
}

double LyapunovSpec::supremum_inside(double r, std::size_t n_regimes) const {
  switch (kind_) {
    case Kind::Power: return gamma_ * static_cast<double>(n_regimes) * std::pow(r, beta_);
    case Kind::Quadratic: return c_ * r * r;
    case Kind::Custom: break;
  }
  throw Error(ErrorCode::UnsupportedFamily, "radial bounds need a power or quadratic function");
}

WioTerms wio_terms(const Simulator& sim, const LyapunovSpec& U, double t, int y, int h, std::span<const double> x) {
  const SystemSpec& spec = sim.spec();
  if (x.size() != spec.dim()) throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  if (y < 1 || y > static_cast<int>(spec.n_regimes())) throw Error(ErrorCode::IndexOutOfRange, "regime out of range");
  if (h < 1 || h > static_cast<int>(spec.n_marks())) throw Error(ErrorCode::IndexOutOfRange, "mark out of range");

  WioTerms w;
  w.time = U.time_derivative(t, y, h, x);

  const auto grad = U.gradient(t, y, h, x);
  const auto hess = U.hessian(t, y, h, x);
  const double a = spec.drift.coefficient(y);
  const double b = spec.diffusion.coefficient(y);
  for (std::size_t j = 0; j < x.size(); ++j) {
    double drift = spec.drift.is_linear() ? a * x[j] : a;
    double diff = spec.diffusion.is_linear() ? b * x[j] : b;
    w.diffusion += grad[j] * drift + 0.5 * hess[j][j] * diff * diff;
  }

  const double here = U.value(t, y, h, x);
  std::vector<double> moved(x.begin(), x.end());
  for (int j = 1; j <= static_cast<int>(spec.n_regimes()); ++j) {
    if (j == y) continue;
    double rate = spec.xi.rate(y, j);
    if (rate == 0.0) continue;
    std::copy(x.begin(), x.end(), moved.begin());
    if (const SwitchRule* rule = spec.switch_rule(y, j)) {
      for (double& v : moved) v = rule->scale * v + rule->shift;
    }
    w.switching += rate * (U.value(t, j, h, moved) - here);
  }

  if (const ScheduledJump* jump = jump_at(sim.schedule(), t)) {
    const auto& row = spec.eta.at_step(jump->k)[static_cast<std::size_t>(h - 1)];
    double expected = 0.0;
    for (int z = 1; z <= static_cast<int>(spec.n_marks()); ++z) {
      double p = row[static_cast<std::size_t>(z - 1)];
      if (p == 0.0) continue;
      std::copy(x.begin(), x.end(), moved.begin());
      spec.jump.apply(jump->k, y, spec.mark_value(z), moved);
      expected += p * U.value(t, y, z, moved);
    }
    w.impulse = expected - here;
  }
  return w;
}

double wio_evaluate(const Simulator& sim, const LyapunovSpec& U, double t, int y, int h, std::span<const double> x) {
  return wio_terms(sim, U, t, y, h, x).total();
}

double wio_evaluate(const SystemSpec& spec, const LyapunovSpec& U, double t, int y, int h,
                    std::span<const double> x) {
  return wio_evaluate(Simulator(spec, IntegratorConfig{}), U, t, y, h, x);
}

Estimate wio_finite_difference_oracle(const SystemSpec& spec, const LyapunovSpec& U, double t, int y, int h,
                                      std::span<const double> x, std::size_t mc, double dt,
                                      const RngPolicy& policy) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (mc < 2) throw Error(ErrorCode::InvalidArgument, "mc must be >= 2");
  IntegratorConfig cfg;
  cfg.dt_max = dt;
  cfg.refine_near_star = false;
  cfg.overflow_threshold = std::numeric_limits<double>::max();
  Simulator sim(spec, cfg);
  for (const auto& j : sim.schedule().jumps) {
    if (j.t > t && j.t <= t + dt) throw Error(ErrorCode::InvalidArgument, "a jump time lies inside (t, t + dt]");
  }

  const double base = U.value(t, y, h, x);
  Accumulator acc;
  HybridState state;
  for (std::size_t block = 0; block * kBlock < mc; ++block) {
    PathStreams streams = PathStreams::derive(policy, kWioDomain, block);
    std::size_t end = std::min(mc, (block + 1) * kBlock);
    for (std::size_t i = block * kBlock; i < end; ++i) {
      state.t = t;
      state.x.assign(x.begin(), x.end());
      state.regime = y;
      state.mark = h;
      state.next_switch = std::numeric_limits<double>::quiet_NaN();
      sim.advance(state, t + dt, streams);
      acc.add(U.value(state.t, state.regime, state.mark, state.x) - base);
    }
  }
  return acc.estimate(1.0 / dt);
}

Estimate discrete_lyapunov_operator(const Simulator& sim, const LyapunovSpec& v, int y, int h,
                                    std::span<const double> x, std::size_t k, std::size_t mc,
                                    const RngPolicy& policy) {
  if (k + 1 > sim.n_jumps()) {
    throw Error(ErrorCode::InvalidSegment, "segment " + std::to_string(k) + " needs jump " + std::to_string(k + 1) +
                                               " but the schedule has " + std::to_string(sim.n_jumps()));
  }
  if (mc < 1) throw Error(ErrorCode::InvalidArgument, "mc must be >= 1");
  const double t0 = sim.skeleton_time(k);
  const double t1 = sim.skeleton_time(k + 1);
  const double base = v.value(t0, y, h, x);
  Accumulator acc;
  HybridState state;
  for (std::size_t block = 0; block * kBlock < mc; ++block) {
    PathStreams streams = PathStreams::derive(policy, kDiscreteDomain + 0x100000 * k, block);
    std::size_t end = std::min(mc, (block + 1) * kBlock);
    for (std::size_t i = block * kBlock; i < end; ++i) {
      state.t = t0;
      state.x.assign(x.begin(), x.end());
      state.regime = y;
      state.mark = h;
      state.next_switch = std::numeric_limits<double>::quiet_NaN();
      sim.advance(state, t1, streams);
      acc.add(v.value(t1, state.regime, state.mark, state.x) - base);
    }
  }
  return acc.estimate();
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g;
  if (n == 0) return g;
  if (n == 1) return {lo};
  double a = std::log(lo);
  double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(i == 0 ? lo : i + 1 == n ? hi : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  return g;
}

JumpMomentResult check_jump_moment_condition(const SystemSpec& spec, double beta, long k_max, std::span<const double> x_grid) {
  if (x_grid.empty()) throw Error(ErrorCode::EmptyGrid, "the jump moment check needs a non-empty x grid");
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  for (double v : x_grid) {
    if (v == 0.0) throw Error(ErrorCode::InvalidArgument, "x grid must exclude 0");
  }
  JumpMomentResult res;
  res.beta = beta;
  res.k_max = k_max;
  res.worst.ratio = -1.0;
  const double log2 = std::log(2.0);
  const std::size_t dim = spec.dim();
  std::vector<double> x(dim);
  for (long k = 1; k <= k_max; ++k) {
    for (int y = 1; y <= static_cast<int>(spec.n_regimes()); ++y) {
      for (int h = 1; h <= static_cast<int>(spec.n_marks()); ++h) {
        const auto& row = spec.eta.at_step(k)[static_cast<std::size_t>(h - 1)];
        for (double xv : x_grid) {
          std::fill(x.begin(), x.end(), xv);
          const double log_base = beta * 0.5 * std::log(squared_norm(x));
          // log-sum-exp over the destination marks
          std::vector<double> logs;
          for (int z = 1; z <= static_cast<int>(spec.n_marks()); ++z) {
            double p = row[static_cast<std::size_t>(z - 1)];
            if (p == 0.0) continue;
            logs.push_back(std::log(p) + beta * spec.jump.log_norm_after(k, y, spec.mark_value(z), x));
          }
          double top = *std::max_element(logs.begin(), logs.end());
          double s = 0.0;
          for (double l : logs) s += std::exp(l - top);
          double log_ratio = top + std::log(s) - log_base;
          double ratio = std::exp(log_ratio);
          JumpMomentPoint pt{k, y, h, xv, ratio};
          if (ratio > res.worst.ratio) res.worst = pt;
          if (log_ratio > log2 + 1e-12) {
            res.pass = false;
            if (!res.first_violation) res.first_violation = pt;
          }
        }
      }
    }
  }
  return res;
}

StabilityTestReport stability_test(const SystemSpec& spec, const StabilityTestOptions& opts) {
  spec.validate();
  if (!spec.drift.is_linear() || !spec.diffusion.is_linear()) {
    throw Error(ErrorCode::UnsupportedFamily, "the stability test applies to linear drift and diffusion");
  }
  const int n = static_cast<int>(spec.n_regimes());
  StabilityTestReport rep;
  for (int i = 1; i <= n; ++i) {
    if (spec.diffusion.coefficient(i) == 0.0) {
      throw Error(ErrorCode::ZeroDiffusion, "regime " + std::to_string(i) + " has zero diffusion");
    }
    rep.b_max = std::max(rep.b_max, std::abs(spec.diffusion.coefficient(i)));
  }

  auto margin = [&](int i) {
    double b = spec.diffusion.coefficient(i);
    return spec.drift.coefficient(i) - b * b / 2.0;
  };
  if (opts.search) {
    rep.epsilon_searched = true;
    rep.epsilon_feasible = false;
    std::vector<double> grid = opts.eps_grid;
    std::sort(grid.begin(), grid.end());
    rep.epsilon = grid.empty() ? 0.1 : grid.front();
    for (double eps : grid) {
      bool ok = true;
      for (int i = 1; i <= n; ++i) ok = ok && margin(i) < -eps;
      if (ok) {
        rep.epsilon = eps;
        rep.epsilon_feasible = true;
      }
    }
  } else {
    rep.epsilon = opts.epsilon.value_or(0.1);
  }
  if (!(rep.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  rep.beta = rep.epsilon / (rep.b_max * rep.b_max);

  bool all = rep.epsilon_feasible;
  for (int i = 1; i <= n; ++i) {
    StabilityTestRow row;
    row.regime = i;
    row.drift = spec.drift.coefficient(i);
    row.diffusion = spec.diffusion.coefficient(i);
    row.margin = margin(i);
    row.margin_pass = row.margin < -rep.epsilon;
    for (int j = i + 1; j <= n; ++j) row.switching_sum += (j - i) * spec.xi.jump_probability(i, j);
    row.rhs = i * (rep.beta * rep.epsilon + 2.0) / 2.0;
    row.switching_pass = row.switching_sum < row.rhs;
    row.drift_pass = row.drift < row.rhs;
    all = all && row.margin_pass && row.switching_pass && row.drift_pass;
    rep.rows.push_back(row);
  }
  long k_max = opts.k_max > 0 ? opts.k_max : spec.schedule.k_max;
  rep.jump_moment = check_jump_moment_condition(spec, rep.beta, k_max, opts.x_grid);
  rep.pass = all && rep.jump_moment.pass;
  return rep;
}

std::vector<GridPoint> radial_grid(std::size_t n_regimes, std::size_t n_marks, std::size_t dim, double r_min,
                                   double r_max, std::size_t n) {
  std::vector<GridPoint> out;
  const double unit = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int y = 1; y <= static_cast<int>(n_regimes); ++y) {
    for (int h = 1; h <= static_cast<int>(n_marks); ++h) {
      for (double r : log_grid(r_min, r_max, n)) out.push_back({y, h, std::vector<double>(dim, r * unit)});
    }
  }
  return out;
}

namespace {

struct SandwichFit {
  bool ok = true;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::string reason;
  std::optional<GridPoint> witness;
  double witness_ratio = 0.0;
};

SandwichFit fit_sandwich(const LyapunovSpec& f, std::span<const GridPoint> grid, double t, const char* name) {
  SandwichFit fit;
  std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> extremes;  // (y,h) -> (min r, max r)
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid[i];
    double r2 = squared_norm(p.x);
    if (r2 == 0.0) throw Error(ErrorCode::InvalidArgument, "grid must exclude x = 0");
    double ratio = f.value(t, p.y, p.h, p.x) / r2;
    if (!(ratio > 0.0)) {
      fit.ok = false;
      fit.reason = std::string(name) + " is not positive on the grid";
      fit.witness = p;
      fit.witness_ratio = ratio;
      return fit;
    }
    fit.lo = std::min(fit.lo, ratio);
    fit.hi = std::max(fit.hi, ratio);
    auto key = std::make_pair(p.y, p.h);
    auto it = extremes.find(key);
    if (it == extremes.end()) {
      extremes[key] = {i, i};
    } else {
      if (r2 < squared_norm(grid[it->second.first].x)) it->second.first = i;
      if (r2 > squared_norm(grid[it->second.second].x)) it->second.second = i;
    }
  }
  for (const auto& [key, idx] : extremes) {
    const auto& small = grid[idx.first];
    const auto& large = grid[idx.second];
    double r_small = std::sqrt(squared_norm(small.x));
    double r_large = std::sqrt(squared_norm(large.x));
    if (!(r_large > r_small * (1.0 + 1e-9))) continue;
    double slope = (std::log(f.value(t, large.y, large.h, large.x)) - std::log(f.value(t, small.y, small.h, small.x))) /
                   (std::log(r_large) - std::log(r_small));
    if (std::abs(slope - 2.0) > 0.05) {
      fit.ok = false;
      fit.reason = std::string(name) + " grows like ||x||^" + std::to_string(slope) + ", not ||x||^2";
      const auto& w = slope < 2.0 ? small : large;
      fit.witness = w;
      fit.witness_ratio = f.value(t, w.y, w.h, w.x) / squared_norm(w.x);
      return fit;
    }
  }
  return fit;
}

}  // namespace

QuadraticBoundsResult check_quadratic_bounds(const LyapunovSpec& v, const LyapunovSpec* companion,
                                             std::span<const GridPoint> grid, double t) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "quadratic bounds need a non-empty grid");
  QuadraticBoundsResult res;
  SandwichFit fv = fit_sandwich(v, grid, t, "v");
  if (!fv.ok) {
    res.reason = fv.reason;
    res.witness = fv.witness;
    res.witness_ratio = fv.witness_ratio;
    return res;
  }
  res.bounds.c1 = fv.lo;
  res.bounds.c2 = fv.hi;
  if (companion != nullptr) {
    SandwichFit fa = fit_sandwich(*companion, grid, t, "a_k");
    if (!fa.ok) {
      res.reason = fa.reason;
      res.witness = fa.witness;
      res.witness_ratio = fa.witness_ratio;
      return res;
    }
    res.bounds.c3 = fa.lo;
    res.bounds.c4 = fa.hi;
  }
  res.ok = true;
  return res;
}

}  // namespace zenosde
