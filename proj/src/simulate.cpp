#include "zenosde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "parallel.hpp"
#include "zenosde/error.hpp"

namespace zenosde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kEnsembleDomain = 0;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct NullObserver {
  void on_step(double, std::span<const double>, int) {}
  void on_switch(double, std::span<const double>, int) {}
  void on_jump(const ScheduledJump&, int, std::span<const double>, std::span<const double>, int) {}
  void on_observe(std::size_t, double, std::span<const double>, int) {}
};

struct SquareObserver : NullObserver {
  std::vector<double>* out = nullptr;
  void on_observe(std::size_t i, double, std::span<const double> x, int) {
    double s = 0.0;
    for (double v : x) s += v * v;
    (*out)[i] = s;
  }
};

struct RecordingObserver {
  Trajectory* traj = nullptr;
  std::size_t stride = 1;
  std::size_t steps = 0;

  void push(double t, std::span<const double> x, int regime, EventKind ev, long k) {
    traj->samples.push_back(Sample{t, std::vector<double>(x.begin(), x.end()), regime, ev, k});
  }
  void on_step(double t, std::span<const double> x, int regime) {
    if (++steps % stride == 0) push(t, x, regime, EventKind::None, 0);
  }
  void on_switch(double t, std::span<const double> x, int regime) { push(t, x, regime, EventKind::Switch, 0); }
  void on_jump(const ScheduledJump& j, int mark, std::span<const double> before, std::span<const double> after,
               int regime) {
    traj->jumps.push_back(JumpEvent{j.k, j.t, mark, std::vector<double>(before.begin(), before.end()),
                                    std::vector<double>(after.begin(), after.end())});
    push(j.t, after, regime, EventKind::Jump, j.k);
  }
  void on_observe(std::size_t, double t, std::span<const double> x, int regime) {
    if (traj->samples.empty() || traj->samples.back().t != t) push(t, x, regime, EventKind::None, 0);
  }
};

}  // namespace

double euclidean_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  double lo = values[n / 2 - 1];
  double hi = values[n / 2];
  if (std::isinf(lo) || std::isinf(hi)) return hi;
  return 0.5 * (lo + hi);
}

void IntegratorConfig::validate() const {
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) throw Error(ErrorCode::ConfigInvalid, "dt_max must be positive");
  if (!(overflow_threshold > 0.0)) throw Error(ErrorCode::ConfigInvalid, "overflow_threshold must be positive");
  if (min_substeps < 1) throw Error(ErrorCode::ConfigInvalid, "min_substeps must be >= 1");
  if (record_stride < 1) throw Error(ErrorCode::ConfigInvalid, "record_stride must be >= 1");
}

Simulator::Simulator(SystemSpec spec, IntegratorConfig cfg) : spec_(std::move(spec)), cfg_(cfg) {
  spec_.validate();
  cfg_.validate();
  schedule_ = realised_schedule(spec_);
}

HybridState Simulator::initial_state() const {
  HybridState s;
  s.t = 0.0;
  s.x = spec_.x0;
  s.regime = spec_.y0;
  s.mark = spec_.h0;
  return s;
}

template <class Observer>
SegmentResult Simulator::run(HybridState& s, double t_end, PathStreams& streams, std::span<const double> observe,
                             Observer& obs) const {
  SegmentResult res;
  const auto& jumps = schedule_.jumps;
  const double threshold = cfg_.overflow_threshold;
  std::normal_distribution<double> normal(0.0, 1.0);

  auto exploded = [&](double nrm) { return !(nrm <= threshold); };

  double nrm = euclidean_norm(s.x);
  res.sup_norm = nrm;
  if (exploded(nrm)) {
    res.exploded = true;
    res.exploded_at = s.t;
    return res;
  }
  if (std::isnan(s.next_switch)) {
    s.next_switch = s.t + sample_holding(spec_.xi, s.regime, streams.chain, s.next_regime);
  }

  auto jit = std::upper_bound(jumps.begin(), jumps.end(), s.t,
                              [](double t, const ScheduledJump& j) { return t < j.t; });
  std::size_t o = static_cast<std::size_t>(std::lower_bound(observe.begin(), observe.end(), s.t) - observe.begin());
  while (o < observe.size() && observe[o] <= s.t) {
    obs.on_observe(o, s.t, s.x, s.regime);
    ++o;
  }

  while (s.t < t_end) {
    const double tj = (jit != jumps.end() && jit->t <= t_end) ? jit->t : kInf;
    const double ts = s.next_switch <= t_end ? s.next_switch : kInf;
    const double to = (o < observe.size() && observe[o] <= t_end) ? observe[o] : kInf;
    const double seg_end = std::min({t_end, tj, ts, to});

    const double d = seg_end - s.t;
    if (d > 0.0) {
      auto n = static_cast<long>(std::ceil(d / cfg_.dt_max));
      if (cfg_.refine_near_star && seg_end == tj) n = std::max<long>(n, cfg_.min_substeps);
      n = std::max<long>(n, 1);
      const double h = d / static_cast<double>(n);
      const double a = spec_.drift.coefficient(s.regime);
      const double b = spec_.diffusion.coefficient(s.regime);
      const bool lin_a = spec_.drift.is_linear();
      const bool lin_b = spec_.diffusion.is_linear();
      const double t0 = s.t;
      double t_cur = t0;
      for (long i = 1; i <= n; ++i) {
        const double t_next = i == n ? seg_end : t0 + static_cast<double>(i) * h;
        const double dt = t_next - t_cur;
        const double sq = std::sqrt(dt);
        double sum_sq = 0.0;
        for (double& v : s.x) {
          const double drift = lin_a ? a * v : a;
          const double diff = lin_b ? b * v : b;
          v += drift * dt + diff * sq * normal(streams.noise);
          sum_sq += v * v;
        }
        t_cur = t_next;
        nrm = std::sqrt(sum_sq);
        res.sup_norm = std::max(res.sup_norm, nrm);
        if (exploded(nrm)) {
          s.t = t_cur;
          res.exploded = true;
          res.exploded_at = t_cur;
          res.sup_norm = kInf;
          return res;
        }
        obs.on_step(t_cur, s.x, s.regime);
      }
    }
    s.t = seg_end;

    if (seg_end == ts) {
      const int from = s.regime;
      const int to_regime = s.next_regime;
      if (const SwitchRule* rule = spec_.switch_rule(from, to_regime)) {
        for (double& v : s.x) v = rule->scale * v + rule->shift;
      }
      s.regime = to_regime;
      s.next_switch = s.t + sample_holding(spec_.xi, s.regime, streams.chain, s.next_regime);
      nrm = euclidean_norm(s.x);
      res.sup_norm = std::max(res.sup_norm, nrm);
      if (exploded(nrm)) {
        res.exploded = true;
        res.exploded_at = s.t;
        res.sup_norm = kInf;
        return res;
      }
      obs.on_switch(s.t, s.x, s.regime);
    }
    if (seg_end == tj) {
      const ScheduledJump& jump = *jit;
      s.mark = sample_dtmc_step(spec_.eta, s.mark, jump.k, streams.marks);
      std::vector<double> before = s.x;
      spec_.jump.apply(jump.k, s.regime, spec_.mark_value(s.mark), s.x);
      nrm = euclidean_norm(s.x);
      res.sup_norm = std::max(res.sup_norm, nrm);
      ++jit;
      if (exploded(nrm)) {
        res.exploded = true;
        res.exploded_at = s.t;
        res.sup_norm = kInf;
        obs.on_jump(jump, s.mark, before, s.x, s.regime);
        return res;
      }
      obs.on_jump(jump, s.mark, before, s.x, s.regime);
    }
    while (o < observe.size() && observe[o] <= s.t) {
      obs.on_observe(o, s.t, s.x, s.regime);
      ++o;
    }
  }
  return res;
}

SegmentResult Simulator::advance(HybridState& state, double t_end, PathStreams& streams,
                                 std::span<const double> observe, std::vector<double>* observed_sq) const {
  if (observed_sq != nullptr) {
    observed_sq->assign(observe.size(), std::numeric_limits<double>::quiet_NaN());
    SquareObserver obs;
    obs.out = observed_sq;
    return run(state, t_end, streams, observe, obs);
  }
  NullObserver obs;
  return run(state, t_end, streams, observe, obs);
}

SegmentResult Simulator::advance_recorded(HybridState& state, double t_end, PathStreams& streams,
                                          std::span<const double> observe, Trajectory& out) const {
  RecordingObserver obs;
  obs.traj = &out;
  obs.stride = cfg_.record_stride;
  if (out.samples.empty()) obs.push(state.t, state.x, state.regime, EventKind::None, 0);
  SegmentResult r = run(state, t_end, streams, observe, obs);
  out.sup_norm = std::max(out.sup_norm, r.sup_norm);
  if (r.exploded) {
    out.status = PathStatus::Exploded;
    out.exploded_at = r.exploded_at;
  }
  if (out.samples.back().t != state.t) obs.push(state.t, state.x, state.regime, EventKind::None, 0);
  return r;
}

Trajectory Simulator::simulate_path(double horizon, std::uint64_t path_index, const RngPolicy& policy,
                                    std::span<const double> observe) const {
  if (!(horizon > 0.0)) throw Error(ErrorCode::ConfigInvalid, "horizon must be positive");
  Trajectory traj;
  HybridState state = initial_state();
  PathStreams streams = PathStreams::derive(policy, kEnsembleDomain, path_index);
  advance_recorded(state, horizon, streams, observe, traj);
  return traj;
}

Trajectory simulate_path(const SystemSpec& spec, const IntegratorConfig& cfg, double horizon,
                         std::uint64_t path_index, const RngPolicy& policy) {
  return Simulator(spec, cfg).simulate_path(horizon, path_index, policy);
}

std::vector<double> uniform_grid(double horizon, std::size_t n) {
  std::vector<double> g;
  if (n == 0) return g;
  if (n == 1) return {horizon};
  g.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.push_back(i + 1 == n ? horizon : horizon * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return g;
}

EnsembleSummary simulate_ensemble(const Simulator& sim, double horizon, std::size_t n_paths,
                                  const RngPolicy& policy, std::span<const double> time_grid, unsigned threads) {
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  if (!(horizon > 0.0)) throw Error(ErrorCode::ConfigInvalid, "horizon must be positive");
  std::vector<double> grid(time_grid.begin(), time_grid.end());
  if (grid.empty()) grid = uniform_grid(horizon, 101);
  if (!std::is_sorted(grid.begin(), grid.end())) throw Error(ErrorCode::InvalidArgument, "time grid must be increasing");
  if (grid.back() > horizon) throw Error(ErrorCode::InvalidArgument, "time grid extends past the horizon");

  struct PathResult {
    std::vector<double> sq;
    double sup = 0.0;
    bool exploded = false;
    double exploded_at = 0.0;
  };
  std::vector<PathResult> results(n_paths);
  detail::parallel_for(n_paths, threads, [&](std::size_t i) {
    HybridState state = sim.initial_state();
    PathStreams streams = PathStreams::derive(policy, kEnsembleDomain, i);
    PathResult& r = results[i];
    SegmentResult seg = sim.advance(state, horizon, streams, grid, &r.sq);
    r.sup = seg.sup_norm;
    r.exploded = seg.exploded;
    r.exploded_at = seg.exploded_at;
  });

  EnsembleSummary out;
  out.times = grid;
  out.n_paths = n_paths;
  const std::size_t m = grid.size();
  out.mean_sq_norm.assign(m, 0.0);
  out.stderr_sq_norm.assign(m, 0.0);
  out.explosion_fraction.assign(m, 0.0);
  for (std::size_t g = 0; g < m; ++g) {
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t count = 0;
    std::size_t gone = 0;
    for (const auto& r : results) {
      if (r.exploded && r.exploded_at <= grid[g]) {
        ++gone;
        continue;
      }
      sum += r.sq[g];
      sum2 += r.sq[g] * r.sq[g];
      ++count;
    }
    out.explosion_fraction[g] = static_cast<double>(gone) / static_cast<double>(n_paths);
    if (count == 0) {
      out.mean_sq_norm[g] = std::numeric_limits<double>::quiet_NaN();
      out.stderr_sq_norm[g] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double mean = sum / static_cast<double>(count);
    out.mean_sq_norm[g] = mean;
    if (count > 1) {
      double var = std::max(0.0, (sum2 - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1));
      out.stderr_sq_norm[g] = std::sqrt(var / static_cast<double>(count));
    }
  }
  out.sup_norms.reserve(n_paths);
  for (const auto& r : results) {
    out.sup_norms.push_back(r.exploded ? kInf : r.sup);
    if (r.exploded) ++out.n_exploded;
  }
  out.median_sup = median(out.sup_norms);
  out.max_sup = *std::max_element(out.sup_norms.begin(), out.sup_norms.end());
  return out;
}

EnsembleSummary simulate_ensemble(const SystemSpec& spec, const IntegratorConfig& cfg, double horizon,
                                  std::size_t n_paths, const RngPolicy& policy,
                                  std::span<const double> time_grid, unsigned threads) {
  return simulate_ensemble(Simulator(spec, cfg), horizon, n_paths, policy, time_grid, threads);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  std::size_t dim = traj.samples.empty() ? 1 : traj.samples.front().x.size();
  os << "t";
  for (std::size_t j = 1; j <= dim; ++j) os << ",x_" << j;
  os << ",regime,event\n";
  for (const auto& s : traj.samples) {
    os << fmt_double(s.t);
    for (double v : s.x) os << ',' << fmt_double(v);
    os << ',' << s.regime << ',';
    if (s.event == EventKind::Jump) os << "jump:" << s.jump_k;
    else if (s.event == EventKind::Switch) os << "switch";
    os << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, const EnsembleSummary& s) {
  os << "t,mean_sq_norm,stderr,explosion_fraction\n";
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    os << fmt_double(s.times[i]) << ',' << fmt_double(s.mean_sq_norm[i]) << ',' << fmt_double(s.stderr_sq_norm[i])
       << ',' << fmt_double(s.explosion_fraction[i]) << '\n';
  }
}

}  // namespace zenosde
