#include "zenosde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "parallel.hpp"
#include "zenosde/error.hpp"

namespace {
std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}
}  // namespace

namespace zenosde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kBoundDomain = 0x42444e;
constexpr std::uint64_t kOuterDomain = 0x534d4f;
constexpr std::uint64_t kInnerDomain = 0x534d49;

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

Estimate estimate_of(std::span<const double> values) {
  Estimate e;
  e.n = values.size();
  if (values.empty()) return e;
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return e;
}

}  // namespace

BoundCheckResult verify_segment_bound(const Simulator& sim, std::size_t segment, std::size_t n_paths,
                                       const RngPolicy& policy, unsigned threads) {
  if (segment + 1 > sim.n_jumps()) {
    throw Error(ErrorCode::InvalidSegment, "segment " + std::to_string(segment) + " is not in the truncated schedule");
  }
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  DerivedConstants constants;
  try {
    constants = derive_constants(sim.spec());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnsupportedFamily) throw Error(ErrorCode::ConstantsUnavailable, e.what());
    throw;
  }

  BoundCheckResult res;
  res.segment = segment;
  res.t_start = sim.skeleton_time(segment);
  res.t_end = sim.skeleton_time(segment + 1);
  res.next_jump_k = sim.schedule().jumps[segment].k;
  res.n_paths = n_paths;

  std::vector<double> start_sq(n_paths);
  std::vector<double> sup_sq(n_paths);
  detail::parallel_for(n_paths, threads, [&](std::size_t i) {
    HybridState state = sim.initial_state();
    PathStreams streams = PathStreams::derive(policy, kBoundDomain, i);
    SegmentResult pre = sim.advance(state, res.t_start, streams);
    if (pre.exploded) {
      start_sq[i] = kInf;
      sup_sq[i] = kInf;
      return;
    }
    start_sq[i] = squared_norm(state.x);
    SegmentResult seg = sim.advance(state, res.t_end, streams);
    sup_sq[i] = seg.exploded ? kInf : seg.sup_norm * seg.sup_norm;
  });

  res.lhs = estimate_of(sup_sq);
  res.lhs_ci_upper = res.lhs.ci_high();
  res.start_mean_sq = estimate_of(start_sq).mean;
  res.C = constants.C;
  res.L_next = constants.lipschitz.term(res.next_jump_k);
  res.rhs = 9.0 * std::exp(5.0 * res.C) * (1.0 + 2.0 * res.L_next) *
            (res.start_mean_sq + 5.0 * res.C * (res.t_end - res.t_start));
  res.pass = res.lhs_ci_upper <= res.rhs;
  return res;
}

StabilityProbeResult probe_stability_in_probability(const SystemSpec& spec, const IntegratorConfig& cfg, double eps1,
                                                    double horizon, std::size_t n_paths,
                                                    std::span<const double> delta_grid, const RngPolicy& policy,
                                                    unsigned threads) {
  if (!(eps1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps1 must be positive");
  if (delta_grid.empty()) throw Error(ErrorCode::EmptyGrid, "delta grid is empty");
  StabilityProbeResult res;
  res.kind = "prob-sup";
  res.eps1 = eps1;
  res.horizon = horizon;
  res.n_paths = n_paths;
  res.note = "sup over t >= 0 truncated to [0, " + fmt_g(horizon) + "]";

  std::vector<double> deltas(delta_grid.begin(), delta_grid.end());
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  std::vector<double> direction = spec.x0;
  double n0 = std::sqrt(squared_norm(direction));
  if (n0 == 0.0) {
    std::fill(direction.begin(), direction.end(), 0.0);
    direction[0] = 1.0;
  } else {
    for (double& v : direction) v /= n0;
  }

  const std::vector<double> grid{horizon};
  for (double delta : deltas) {
    SystemSpec s = spec;
    for (std::size_t j = 0; j < s.x0.size(); ++j) s.x0[j] = delta * direction[j];
    EnsembleSummary ens = simulate_ensemble(s, cfg, horizon, n_paths, policy, grid, threads);
    std::size_t exceed = 0;
    for (double sup : ens.sup_norms) {
      if (sup > eps1) ++exceed;
    }
    double p = static_cast<double>(exceed) / static_cast<double>(n_paths);
    res.points.push_back({delta, p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_paths)),
                          static_cast<double>(ens.n_exploded) / static_cast<double>(n_paths)});
  }
  res.verdict = true;
  for (std::size_t i = 1; i < res.points.size(); ++i) {
    const auto& big = res.points[i - 1];
    const auto& small = res.points[i];
    double tol = 3.0 * std::hypot(big.std_error, small.std_error);
    if (small.estimate > big.estimate + tol) res.verdict = false;
  }
  res.verdict_text = res.verdict ? "exceedance probability nonincreasing as delta decreases"
                                 : "exceedance probability increases as delta decreases";
  return res;
}

StabilityProbeResult probe_mean_square(const SystemSpec& spec, const IntegratorConfig& cfg,
                                       std::span<const double> time_grid, std::size_t n_paths,
                                       const RngPolicy& policy, unsigned threads) {
  if (time_grid.empty()) throw Error(ErrorCode::EmptyGrid, "time grid is empty");
  if (!std::is_sorted(time_grid.begin(), time_grid.end())) {
    throw Error(ErrorCode::InvalidArgument, "time grid must be increasing");
  }
  StabilityProbeResult res;
  res.kind = "mean-square";
  res.horizon = time_grid.back();
  res.n_paths = n_paths;
  res.note = "limit t -> infinity truncated to the last grid point";
  EnsembleSummary ens = simulate_ensemble(spec, cfg, res.horizon, n_paths, policy, time_grid, threads);
  for (std::size_t i = 0; i < ens.times.size(); ++i) {
    res.points.push_back({ens.times[i], ens.mean_sq_norm[i], ens.stderr_sq_norm[i], ens.explosion_fraction[i]});
  }
  const auto& first = res.points.front();
  const auto& last = res.points.back();
  res.verdict = res.points.size() >= 2 && std::isfinite(last.estimate) && last.explosion_fraction == 0.0 &&
                first.estimate - last.estimate > 3.0 * std::hypot(first.std_error, last.std_error);
  res.verdict_text = res.verdict ? "mean square decays (3 sigma separation)" : "no 3 sigma decay of the mean square";
  return res;
}

SupermartingaleResult probe_supermartingale(const Simulator& sim, const LyapunovSpec& v, std::size_t k_first,
                                            std::size_t k_last, std::size_t n_outer, std::size_t n_inner,
                                            const RngPolicy& policy, unsigned threads) {
  if (k_first > k_last) throw Error(ErrorCode::InvalidArgument, "empty k range");
  if (k_last + 1 > sim.n_jumps()) {
    throw Error(ErrorCode::InvalidSegment, "k range needs " + std::to_string(k_last + 1) + " jumps, schedule has " +
                                               std::to_string(sim.n_jumps()));
  }
  if (n_outer < 2 || n_inner < 1) throw Error(ErrorCode::InvalidArgument, "need n_outer >= 2 and n_inner >= 1");
  const std::size_t nk = k_last - k_first + 1;
  std::vector<double> now(n_outer * nk);
  std::vector<double> next(n_outer * nk);

  detail::parallel_for(n_outer, threads, [&](std::size_t o) {
    HybridState state = sim.initial_state();
    PathStreams outer = PathStreams::derive(policy, kOuterDomain, o);
    HybridState inner_state;
    for (std::size_t k = 0; k <= k_last; ++k) {
      const double t0 = sim.skeleton_time(k);
      const double t1 = sim.skeleton_time(k + 1);
      if (k >= k_first) {
        const std::size_t slot = o * nk + (k - k_first);
        now[slot] = v.value(t0, state.regime, state.mark, state.x);
        PathStreams inner = PathStreams::derive(policy, kInnerDomain + (static_cast<std::uint64_t>(k) << 32), o);
        double sum = 0.0;
        for (std::size_t i = 0; i < n_inner; ++i) {
          inner_state = state;
          inner_state.next_switch = std::numeric_limits<double>::quiet_NaN();
          sim.advance(inner_state, t1, inner);
          sum += v.value(t1, inner_state.regime, inner_state.mark, inner_state.x);
        }
        next[slot] = sum / static_cast<double>(n_inner);
      }
      sim.advance(state, t1, outer);
    }
  });

  SupermartingaleResult res;
  res.n_outer = n_outer;
  res.n_inner = n_inner;
  res.verdict = true;
  std::vector<double> a(n_outer), b(n_outer), d(n_outer);
  for (std::size_t kk = 0; kk < nk; ++kk) {
    for (std::size_t o = 0; o < n_outer; ++o) {
      a[o] = now[o * nk + kk];
      b[o] = next[o * nk + kk];
      d[o] = b[o] - a[o];
    }
    SupermartingaleRow row;
    row.k = k_first + kk;
    row.v_now = estimate_of(a);
    row.v_next = estimate_of(b);
    row.diff = estimate_of(d);
    row.pass = row.diff.mean <= 3.0 * row.diff.std_error;
    res.verdict = res.verdict && row.pass;
    res.rows.push_back(row);
  }
  return res;
}

BlowupReport detect_blowup(const SystemSpec& spec, const IntegratorConfig& cfg, std::span<const long> k_max_grid,
                           double horizon, std::size_t n_paths, const RngPolicy& policy, unsigned threads) {
  if (!spec.schedule.accumulating()) {
    throw Error(ErrorCode::InvalidArgument, "blow-up detection needs an accumulating schedule");
  }
  if (k_max_grid.empty()) throw Error(ErrorCode::EmptyGrid, "K_max grid is empty");
  std::vector<long> ks(k_max_grid.begin(), k_max_grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  BlowupReport rep;
  rep.horizon = horizon;
  rep.threshold = cfg.overflow_threshold;
  IntegratorConfig uncapped = cfg;
  uncapped.overflow_threshold = std::numeric_limits<double>::max();
  const std::vector<double> grid{horizon};
  for (long k : ks) {
    SystemSpec s = spec;
    s.schedule.k_max = k;
    Simulator sim(s, uncapped);
    EnsembleSummary ens = simulate_ensemble(sim, horizon, n_paths, policy, grid, threads);
    std::size_t over = 0;
    for (double sup : ens.sup_norms) {
      if (sup > cfg.overflow_threshold) ++over;
    }
    rep.rows.push_back({k, sim.n_jumps(), ens.median_sup, ens.max_sup,
                        static_cast<double>(over) / static_cast<double>(n_paths)});
  }
  rep.growth = rep.rows.size() >= 2;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    double prev = rep.rows[i - 1].median_sup;
    double cur = rep.rows[i].median_sup;
    bool grew = std::isinf(prev) ? std::isinf(cur) : cur > prev * (1.0 + 1e-6);
    rep.growth = rep.growth && grew;
  }
  return rep;
}

}  // namespace zenosde
