#include "zenosde/system.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "zenosde/error.hpp"

namespace zenosde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double saturate(double v) { return std::clamp(v, -1.0, 1.0); }

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

const JumpMap* find_map(const std::vector<JumpMap>& maps, long k) {
  for (const auto& m : maps) {
    if (m.k == k) return &m;
  }
  return nullptr;
}

Sequence zero_sequence() {
  return Sequence{[](long) { return 0.0; }, [](long) { return 0.0; }, 0.0};
}

Sequence divergent_sequence(std::function<double(long)> term) {
  return Sequence{std::move(term), [](long) { return kInf; }, kInf};
}

// factor * rho^k, k >= 1
Sequence geometric_sequence(double factor, double rho) {
  if (factor == 0.0) return zero_sequence();
  auto term = [factor, rho](long k) { return factor * std::pow(rho, static_cast<double>(k)); };
  if (rho >= 1.0) return divergent_sequence(term);
  auto tail = [factor, rho](long k) { return factor * std::pow(rho, static_cast<double>(k)) / (1.0 - rho); };
  return Sequence{term, tail, factor * rho / (1.0 - rho)};
}

Sequence listed_sequence(std::vector<double> values) {
  std::vector<double> suffix(values.size() + 1, 0.0);
  for (std::size_t i = values.size(); i-- > 0;) suffix[i] = suffix[i + 1] + values[i];
  double total = suffix.front();
  auto term = [values](long k) {
    return k >= 1 && static_cast<std::size_t>(k) <= values.size() ? values[static_cast<std::size_t>(k - 1)] : 0.0;
  };
  auto tail = [suffix](long k) {
    if (k < 1) k = 1;
    return static_cast<std::size_t>(k) <= suffix.size() - 1 ? suffix[static_cast<std::size_t>(k - 1)] : 0.0;
  };
  return Sequence{term, tail, total};
}

double growth_square(const CoefficientFamily& f, int regime, std::size_t dim) {
  double c = f.coefficient(regime);
  return f.is_linear() ? c * c : static_cast<double>(dim) * c * c;
}

double lipschitz_square(const CoefficientFamily& f, int regime) {
  double c = f.coefficient(regime);
  return f.is_linear() ? c * c : 0.0;
}

// max over marks of sign * eta
double extreme_mark_exponent(const SystemSpec& spec) {
  double best = -kInf;
  for (int h = 1; h <= static_cast<int>(spec.n_marks()); ++h) {
    best = std::max(best, spec.jump.sign * spec.mark_value(h));
  }
  return best;
}

}  // namespace

void JumpFamily::apply(long k, int /*regime*/, double mark_value, std::span<double> x) const {
  switch (kind) {
    case Kind::Zero:
      return;
    case Kind::ScalePoly: {
      double kk = static_cast<double>(k) * static_cast<double>(k);
      for (double& v : x) v += kk * v;
      return;
    }
    case Kind::ExpMarkClamped: {
      double f = scale * std::exp(sign * alpha * static_cast<double>(k) * mark_value);
      for (double& v : x) v += f * saturate(v);
      return;
    }
    case Kind::CustomSequence: {
      if (const JumpMap* m = find_map(maps, k)) {
        for (double& v : x) v += m->slope * v + m->offset;
      }
      return;
    }
  }
}

double JumpFamily::log_norm_after(long k, int regime, double mark_value, std::span<const double> x) const {
  if (kind == Kind::ExpMarkClamped) {
    double e = sign * alpha * static_cast<double>(k) * mark_value;
    if (e > 0.0) {
      double shrink = std::exp(-e);
      double s = 0.0;
      for (double v : x) {
        double w = v * shrink + scale * saturate(v);
        s += w * w;
      }
      return e + 0.5 * std::log(s);
    }
  }
  std::vector<double> y(x.begin(), x.end());
  apply(k, regime, mark_value, y);
  return std::log(norm(y));
}

double JumpSchedule::concentration_point() const {
  switch (kind) {
    case Kind::HarmonicToPoint: return t_star;
    case Kind::HarmonicToZero: return 0.0;
    case Kind::ExplicitList: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double SystemSpec::mark_value(int h) const {
  if (mark_values.empty()) return static_cast<double>(h);
  return mark_values[static_cast<std::size_t>(h - 1)];
}

const SwitchRule* SystemSpec::switch_rule(int from, int to) const {
  for (const auto& r : switch_kernel) {
    if (r.from == from && r.to == to) return &r;
  }
  return nullptr;
}

void SystemSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (x0.empty()) fail("initial state must have dimension >= 1");
  for (double v : x0) {
    if (!std::isfinite(v)) fail("initial state must be finite");
  }
  if (drift.n_regimes() != n_regimes()) fail("drift has " + std::to_string(drift.n_regimes()) +
                                             " regimes, generator has " + std::to_string(n_regimes()));
  if (diffusion.n_regimes() != n_regimes()) fail("diffusion has " + std::to_string(diffusion.n_regimes()) +
                                                 " regimes, generator has " + std::to_string(n_regimes()));
  for (double v : drift.coefficients) {
    if (!std::isfinite(v)) fail("drift coefficient is not finite");
  }
  for (double v : diffusion.coefficients) {
    if (!std::isfinite(v)) fail("diffusion coefficient is not finite");
  }
  if (y0 < 1 || y0 > static_cast<int>(n_regimes())) fail("initial regime y0 out of range");
  if (h0 < 1 || h0 > static_cast<int>(n_marks())) fail("initial mark h0 out of range");
  if (!mark_values.empty() && mark_values.size() != n_marks()) fail("mark values do not match the mark chain size");
  for (const auto& r : switch_kernel) {
    int n = static_cast<int>(n_regimes());
    if (r.from < 1 || r.from > n || r.to < 1 || r.to > n || r.from == r.to) fail("switch kernel pair out of range");
  }
  if (jump.kind == JumpFamily::Kind::ExpMarkClamped) {
    if (!(jump.alpha > 0.0)) fail("jump alpha must be positive");
    if (jump.sign != 1 && jump.sign != -1) fail("jump sign must be +1 or -1");
  }
  if (schedule.k_max < 1) fail("schedule k_max must be >= 1");
  if (!(schedule.delta_min >= 0.0)) fail("schedule delta_min must be >= 0");
  if (schedule.kind == JumpSchedule::Kind::HarmonicToPoint && !(schedule.c > 0.0)) fail("schedule c must be positive");
  if (schedule.kind == JumpSchedule::Kind::HarmonicToZero && !(schedule.alpha > 0.0)) fail("schedule alpha must be positive");
}

DerivedConstants derive_constants(const SystemSpec& spec) {
  DerivedConstants out;
  const std::size_t dim = spec.dim();
  double coeff_growth = 0.0;
  double coeff_lip = 0.0;
  for (int y = 1; y <= static_cast<int>(spec.n_regimes()); ++y) {
    coeff_growth = std::max(coeff_growth, growth_square(spec.drift, y, dim) + growth_square(spec.diffusion, y, dim));
    coeff_lip = std::max(coeff_lip, lipschitz_square(spec.drift, y) + lipschitz_square(spec.diffusion, y));
  }

  const JumpFamily& j = spec.jump;
  double sup_gamma = 0.0;
  switch (j.kind) {
    case JumpFamily::Kind::Zero:
      out.lipschitz = zero_sequence();
      out.sup_norm = zero_sequence();
      break;
    case JumpFamily::Kind::ScalePoly:
      out.lipschitz = divergent_sequence([](long k) { return std::pow(static_cast<double>(k), 4.0); });
      out.sup_norm = divergent_sequence([](long) { return kInf; });
      sup_gamma = kInf;
      break;
    case JumpFamily::Kind::ExpMarkClamped: {
      double e = extreme_mark_exponent(spec);
      double rho = std::exp(j.alpha * e);
      double amp = std::abs(j.scale) * std::sqrt(static_cast<double>(dim));
      out.lipschitz = geometric_sequence(j.scale * j.scale, rho * rho);
      out.sup_norm = geometric_sequence(amp, rho);
      if (amp == 0.0) sup_gamma = 0.0;
      else if (e < 0.0) sup_gamma = amp * rho;
      else if (e == 0.0) sup_gamma = amp;
      else sup_gamma = kInf;
      break;
    }
    case JumpFamily::Kind::CustomSequence: {
      if (!j.lipschitz_seq || !j.sup_seq) {
        throw Error(ErrorCode::UnsupportedFamily, "custom-sequence jumps need user-supplied L_k and gamma_k");
      }
      out.lipschitz = listed_sequence(*j.lipschitz_seq);
      out.sup_norm = listed_sequence(*j.sup_seq);
      for (double g : *j.sup_seq) sup_gamma = std::max(sup_gamma, g);
      break;
    }
  }
  out.C = coeff_growth + sup_gamma * sup_gamma;
  out.L = coeff_lip;
  return out;
}

std::vector<double> default_eps_grid() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

long n_epsilon(const Sequence& gamma, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::NeverReached, "eps must be positive");
  if (gamma.divergent()) throw Error(ErrorCode::DivergentTail, "sum of gamma_m diverges");

  if (gamma.tail) {
    if (gamma.tail(1) < eps) return 1;
    long hi = 2;
    while (!(gamma.tail(hi) < eps)) {
      if (hi > (1L << 40)) throw Error(ErrorCode::DivergentTail, "tail never drops below eps");
      hi *= 2;
    }
    long lo = hi / 2;  // tail(lo) >= eps
    while (hi - lo > 1) {
      long mid = lo + (hi - lo) / 2;
      if (gamma.tail(mid) < eps) hi = mid;
      else lo = mid;
    }
    return hi;
  }

  // Numeric: sum terms until they fall below 1e-12 of the running total,
  // then take suffix sums from the back.
  constexpr long kMaxTerms = 10'000'000;
  std::vector<double> terms;
  double running = 0.0;
  for (long k = 1;; ++k) {
    if (k > kMaxTerms) throw Error(ErrorCode::DivergentTail, "series did not converge numerically");
    double t = gamma.term(k);
    if (!std::isfinite(t)) throw Error(ErrorCode::DivergentTail, "infinite term");
    terms.push_back(t);
    running += t;
    if (running > 0.0 && t <= 1e-12 * running) break;
    if (running == 0.0 && k >= 64) break;
  }
  std::vector<double> suffix(terms.size() + 1, 0.0);
  for (std::size_t i = terms.size(); i-- > 0;) suffix[i] = suffix[i + 1] + terms[i];
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (suffix[i] < eps) return static_cast<long>(i + 1);
  }
  return static_cast<long>(suffix.size());
}

ConditionReport check_conditions(const SystemSpec& spec, std::span<const double> eps_grid) {
  ConditionReport r;
  r.constants = derive_constants(spec);
  const auto& c = r.constants;
  r.growth = {std::isfinite(c.C), c.C, std::isfinite(c.C) ? "C finite" : "no uniform growth constant"};
  r.lipschitz = {std::isfinite(c.L), c.L, std::isfinite(c.L) ? "L finite" : "no Lipschitz constant"};
  r.jump_lipschitz = {!c.lipschitz.divergent(), c.lipschitz.sum,
                      c.lipschitz.divergent() ? "sum of L_k diverges" : "sum of L_k finite"};
  r.jump_summability = {!c.sup_norm.divergent(), c.sup_norm.sum,
                        c.sup_norm.divergent() ? "sum of gamma_k diverges" : "sum of gamma_k finite"};

  if (c.sup_norm.divergent()) {
    r.eps_trend = {false, 0.0, "N_eps undefined: sum of gamma_k diverges"};
    return r;
  }
  std::vector<double> grid(eps_grid.begin(), eps_grid.end());
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double eps : grid) {
    long n = n_epsilon(c.sup_norm, eps);
    double partial = 0.0;
    for (long k = 1; k <= n; ++k) partial += c.lipschitz.term(k);
    r.eps_table.push_back({eps, n, std::log(eps) + static_cast<double>(n) * partial});
  }
  bool decreasing = r.eps_table.size() >= 2 && !c.lipschitz.divergent();
  for (std::size_t i = 1; i < r.eps_table.size(); ++i) {
    if (!(r.eps_table[i].value < r.eps_table[i - 1].value)) decreasing = false;
  }
  r.eps_trend = {decreasing, r.eps_table.empty() ? 0.0 : r.eps_table.back().value,
                 decreasing ? "strictly decreasing as eps decreases" : "not strictly decreasing over the eps grid"};
  return r;
}

Schedule generate_schedule(const JumpSchedule& s) {
  if (s.k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 1");
  std::vector<ScheduledJump> candidates;
  switch (s.kind) {
    case JumpSchedule::Kind::ExplicitList: {
      std::vector<double> times = s.times;
      for (double t : times) {
        if (!std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "jump time is not finite");
      }
      std::sort(times.begin(), times.end());
      for (std::size_t i = 0; i < times.size(); ++i) candidates.push_back({static_cast<long>(i + 1), times[i]});
      break;
    }
    case JumpSchedule::Kind::HarmonicToPoint:
      if (!(s.c > 0.0)) throw Error(ErrorCode::InvalidArgument, "c must be positive");
      for (long k = 1; k <= s.k_max; ++k) candidates.push_back({k, s.t_star - s.c / static_cast<double>(k)});
      break;
    case JumpSchedule::Kind::HarmonicToZero:
      if (!(s.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
      for (long k = 1; k <= s.k_max; ++k) candidates.push_back({k, s.alpha / static_cast<double>(k)});
      break;
  }

  Schedule out;
  std::optional<double> last_t;
  for (const auto& j : candidates) {
    bool keep = j.k <= s.k_max && j.t > 0.0;
    if (keep && last_t) {
      double gap = std::abs(j.t - *last_t);
      keep = gap > 0.0 && gap >= s.delta_min;
    }
    if (keep) {
      out.jumps.push_back(j);
      last_t = j.t;
    } else {
      ++out.truncated;
    }
  }
  if (out.jumps.empty()) throw Error(ErrorCode::EmptySchedule, "no jump times survive truncation");
  std::sort(out.jumps.begin(), out.jumps.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return out;
}

Schedule realised_schedule(const SystemSpec& spec) {
  if (spec.schedule.kind == JumpSchedule::Kind::ExplicitList && spec.schedule.times.empty()) return {};
  return generate_schedule(spec.schedule);
}

}  // namespace zenosde
