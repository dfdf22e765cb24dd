#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "zenosde/rng.hpp"
#include "zenosde/system.hpp"

namespace zenosde {

struct IntegratorConfig {
  double dt_max = 1e-3;
  /// Every step interval that ends on a jump time gets at least
  /// `min_substeps` steps, so near a concentration point the step size
  /// shrinks with the inter-jump gap (at most half of it by default).
  bool refine_near_star = true;
  int min_substeps = 2;
  std::size_t record_stride = 1;
  double overflow_threshold = 1e12;

  void validate() const;
};

enum class EventKind { None, Jump, Switch };

struct Sample {
  double t = 0.0;
  std::vector<double> x;
  int regime = 1;
  EventKind event = EventKind::None;
  long jump_k = 0;
};

struct JumpEvent {
  long k = 0;
  double t = 0.0;
  int mark = 1;
  std::vector<double> x_before;
  std::vector<double> x_after;
};

enum class PathStatus { Completed, Exploded };

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<JumpEvent> jumps;
  PathStatus status = PathStatus::Completed;
  double exploded_at = std::numeric_limits<double>::quiet_NaN();
  double sup_norm = 0.0;  // over every integration point, pre- and post-jump
};

/// Full hybrid state of a path, including the pending regime switch so that
/// a path advanced in pieces is the same path as one advanced in one go.
struct HybridState {
  double t = 0.0;
  std::vector<double> x;
  int regime = 1;
  int mark = 1;
  double next_switch = std::numeric_limits<double>::quiet_NaN();
  int next_regime = 1;
};

struct SegmentResult {
  double sup_norm = 0.0;
  bool exploded = false;
  double exploded_at = std::numeric_limits<double>::quiet_NaN();
};

/// Hybrid Euler-Maruyama integrator for one validated system. Step
/// boundaries include every regime switch and every scheduled jump time
/// exactly; jumps are applied after the step that lands on them.
class Simulator {
 public:
  Simulator(SystemSpec spec, IntegratorConfig cfg);

  const SystemSpec& spec() const { return spec_; }
  const IntegratorConfig& config() const { return cfg_; }
  const Schedule& schedule() const { return schedule_; }

  HybridState initial_state() const;

  /// Jump-skeleton times: tau_0 = 0, tau_j = time of the j-th jump (ascending).
  std::size_t n_jumps() const { return schedule_.jumps.size(); }
  double skeleton_time(std::size_t j) const { return j == 0 ? 0.0 : schedule_.jumps[j - 1].t; }

  /// Path `path_index` on [0, horizon]. `observe` adds extra step boundaries
  /// at which a sample is recorded.
  Trajectory simulate_path(double horizon, std::uint64_t path_index, const RngPolicy& policy,
                           std::span<const double> observe = {}) const;

  /// Advances `state` to `t_end`, applying jumps in (state.t, t_end]. If
  /// `observed_sq` is given it receives ||x||^2 at each time in `observe`
  /// (ascending; NaN once the path has exploded).
  SegmentResult advance(HybridState& state, double t_end, PathStreams& streams,
                        std::span<const double> observe = {}, std::vector<double>* observed_sq = nullptr) const;

  /// Same, recording into a trajectory.
  SegmentResult advance_recorded(HybridState& state, double t_end, PathStreams& streams,
                                 std::span<const double> observe, Trajectory& out) const;

 private:
  template <class Observer>
  SegmentResult run(HybridState& state, double t_end, PathStreams& streams, std::span<const double> observe,
                    Observer& observer) const;

  SystemSpec spec_;
  IntegratorConfig cfg_;
  Schedule schedule_;
};

Trajectory simulate_path(const SystemSpec& spec, const IntegratorConfig& cfg, double horizon,
                         std::uint64_t path_index, const RngPolicy& policy);

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<double> mean_sq_norm;  // over paths not yet exploded at t
  std::vector<double> stderr_sq_norm;
  std::vector<double> explosion_fraction;
  std::size_t n_paths = 0;
  std::size_t n_exploded = 0;
  std::vector<double> sup_norms;  // per path, index order; +inf for exploded paths
  double median_sup = 0.0;
  double max_sup = 0.0;
};

/// Uniform grid of `n` points on [0, horizon].
std::vector<double> uniform_grid(double horizon, std::size_t n);

/// Statistics are reduced in path-index order, so the result does not depend
/// on `threads`.
EnsembleSummary simulate_ensemble(const Simulator& sim, double horizon, std::size_t n_paths,
                                  const RngPolicy& policy, std::span<const double> time_grid,
                                  unsigned threads = 1);
EnsembleSummary simulate_ensemble(const SystemSpec& spec, const IntegratorConfig& cfg, double horizon,
                                  std::size_t n_paths, const RngPolicy& policy,
                                  std::span<const double> time_grid, unsigned threads = 1);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_ensemble_csv(std::ostream& os, const EnsembleSummary& summary);

double euclidean_norm(std::span<const double> x);
double median(std::vector<double> values);

}  // namespace zenosde
