#pragma once

#include <span>
#include <string>
#include <vector>

#include "zenosde/lyapunov.hpp"
#include "zenosde/simulate.hpp"
#include "zenosde/system.hpp"

namespace zenosde {

/// Moment bound on one inter-jump segment:
/// E sup ||x||^2 over [tau_k, tau_{k+1}] <= 9 e^{5C} (1 + 2 L_{k+1}) [E ||x(tau_k)||^2 + 5C (tau_{k+1} - tau_k)].
struct BoundCheckResult {
  std::size_t segment = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  long next_jump_k = 0;
  std::size_t n_paths = 0;
  Estimate lhs;               // E sup ||x||^2
  double lhs_ci_upper = 0.0;  // 95%
  double start_mean_sq = 0.0; // E ||x(tau_k)||^2 from the same ensemble
  double C = 0.0;
  double L_next = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

BoundCheckResult verify_segment_bound(const Simulator& sim, std::size_t segment, std::size_t n_paths,
                                       const RngPolicy& policy, unsigned threads = 1);

struct ProbePoint {
  double param = 0.0;  // delta for probability probes, t for mean-square
  double estimate = 0.0;
  double std_error = 0.0;
  double explosion_fraction = 0.0;
};

struct StabilityProbeResult {
  std::string kind;  // "prob-sup" or "mean-square"
  std::vector<ProbePoint> points;
  double eps1 = 0.0;
  double horizon = 0.0;
  std::size_t n_paths = 0;
  bool verdict = false;
  std::string verdict_text;
  std::string note;
};

/// Exceedance probability P(sup_{[0, horizon]} ||x|| > eps1) started from
/// ||x0|| = delta (direction of the configured x0). The verdict holds when the
/// probability does not increase as delta shrinks (3 sigma tolerance).
StabilityProbeResult probe_stability_in_probability(const SystemSpec& spec, const IntegratorConfig& cfg, double eps1,
                                                    double horizon, std::size_t n_paths,
                                                    std::span<const double> delta_grid, const RngPolicy& policy,
                                                    unsigned threads = 1);

/// E ||x(t)||^2 on a time grid; verdict: last value below the first with
/// 3 sigma separation.
StabilityProbeResult probe_mean_square(const SystemSpec& spec, const IntegratorConfig& cfg,
                                       std::span<const double> time_grid, std::size_t n_paths,
                                       const RngPolicy& policy, unsigned threads = 1);

struct SupermartingaleRow {
  std::size_t k = 0;
  Estimate v_now;   // E v_k(state at tau_k)
  Estimate v_next;  // E v_{k+1}(state at tau_{k+1})
  Estimate diff;    // paired difference
  bool pass = false;
};

struct SupermartingaleResult {
  std::vector<SupermartingaleRow> rows;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  bool verdict = false;
};

/// Nested Monte Carlo along the jump skeleton: n_outer paths reach tau_k,
/// and from each, n_inner continuations estimate E[v_{k+1} | state at tau_k].
SupermartingaleResult probe_supermartingale(const Simulator& sim, const LyapunovSpec& v, std::size_t k_first,
                                            std::size_t k_last, std::size_t n_outer, std::size_t n_inner,
                                            const RngPolicy& policy, unsigned threads = 1);

struct BlowupRow {
  long k_max = 0;
  std::size_t n_jumps = 0;
  double median_sup = 0.0;
  double max_sup = 0.0;
  double exploded_fraction = 0.0;  // sup above the configured overflow threshold
};

struct BlowupReport {
  std::vector<BlowupRow> rows;
  double horizon = 0.0;
  double threshold = 0.0;
  bool growth = false;
};

/// Sup-norm statistics as the truncation K_max is lifted. Paths are
/// integrated with the overflow cut-off disabled so the growth itself is
/// measured; `exploded_fraction` still refers to cfg.overflow_threshold.
/// Growth verdict: medians strictly increase (relative step > 1e-6), with an
/// infinite median followed by another infinite one counting as growth.
BlowupReport detect_blowup(const SystemSpec& spec, const IntegratorConfig& cfg, std::span<const long> k_max_grid,
                           double horizon, std::size_t n_paths, const RngPolicy& policy, unsigned threads = 1);

}  // namespace zenosde
