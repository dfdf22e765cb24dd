#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "zenosde/analysis.hpp"
#include "zenosde/cli.hpp"
#include "zenosde/config.hpp"
#include "zenosde/error.hpp"
#include "zenosde/lyapunov.hpp"
#include "zenosde/serialize.hpp"

namespace py = pybind11;
using namespace zenosde;

namespace {

// Reports go across as JSON text; the Python wrapper decodes them.
std::string dump(const nlohmann::json& j) { return j.dump(); }

RunConfig config_from(const std::string& text) { return parse_config_text(text); }

LyapunovSpec lyapunov_from(const std::string& kind, double gamma, double beta, double c) {
  if (kind == "power") return LyapunovSpec::power(gamma, beta);
  if (kind == "quadratic") return LyapunovSpec::quadratic(c);
  throw Error(ErrorCode::InvalidArgument, "lyapunov kind must be 'power' or 'quadratic'");
}

py::dict trajectory_dict(const Trajectory& traj) {
  const std::size_t n = traj.samples.size();
  const std::size_t m = n ? traj.samples.front().x.size() : 0;
  py::array_t<double> t(n);
  py::array_t<double> x({n, m});
  py::array_t<int> regime(n);
  auto tv = t.mutable_unchecked<1>();
  auto xv = x.mutable_unchecked<2>();
  auto rv = regime.mutable_unchecked<1>();
  py::list events;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = traj.samples[i];
    tv(i) = s.t;
    for (std::size_t j = 0; j < m; ++j) xv(i, j) = s.x[j];
    rv(i) = s.regime;
    if (s.event == EventKind::Jump) events.append("jump:" + std::to_string(s.jump_k));
    else if (s.event == EventKind::Switch) events.append("switch");
    else events.append("");
  }
  py::list jumps;
  for (const auto& j : traj.jumps) {
    py::dict d;
    d["k"] = j.k;
    d["t"] = j.t;
    d["mark"] = j.mark;
    d["x_before"] = j.x_before;
    d["x_after"] = j.x_after;
    jumps.append(d);
  }
  py::dict out;
  out["t"] = t;
  out["x"] = x;
  out["regime"] = regime;
  out["event"] = events;
  out["jumps"] = jumps;
  out["status"] = traj.status == PathStatus::Exploded ? "exploded" : "completed";
  out["exploded_at"] = traj.exploded_at;
  out["sup_norm"] = traj.sup_norm;
  return out;
}

}  // namespace

PYBIND11_MODULE(_zenosde, m) {
  m.doc() = "Regime-switching SDEs with impulses at accumulating times";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return dump(preset_json(name)); });
  m.def("resolve_config", [](const std::string& text) { return dump(config_to_json(config_from(text))); },
        "Parse and validate a config, returning the resolved form.");

  m.def(
      "simulate_path",
      [](const std::string& cfg, double horizon, std::uint64_t index, std::uint64_t seed) {
        RunConfig c = config_from(cfg);
        Trajectory traj;
        {
          py::gil_scoped_release release;
          traj = simulate_path(c.system, c.integrator, horizon, index, RngPolicy{seed});
        }
        return trajectory_dict(traj);
      },
      py::arg("config"), py::arg("horizon"), py::arg("index") = 0, py::arg("seed") = 0);

  m.def(
      "simulate_ensemble",
      [](const std::string& cfg, double horizon, std::size_t n_paths, std::uint64_t seed, std::vector<double> grid,
         unsigned threads) {
        RunConfig c = config_from(cfg);
        EnsembleSummary s;
        {
          py::gil_scoped_release release;
          s = simulate_ensemble(c.system, c.integrator, horizon, n_paths, RngPolicy{seed}, grid, threads);
        }
        py::dict out;
        out["t"] = s.times;
        out["mean_sq_norm"] = s.mean_sq_norm;
        out["stderr"] = s.stderr_sq_norm;
        out["explosion_fraction"] = s.explosion_fraction;
        out["sup_norms"] = s.sup_norms;
        out["median_sup"] = s.median_sup;
        out["max_sup"] = s.max_sup;
        out["n_exploded"] = s.n_exploded;
        return out;
      },
      py::arg("config"), py::arg("horizon"), py::arg("n_paths"), py::arg("seed") = 0, py::arg("grid"),
      py::arg("threads") = 1);

  m.def("check_conditions", [](const std::string& cfg) {
    return dump(to_json(check_conditions(config_from(cfg).system, default_eps_grid())));
  });

  m.def(
      "stability_test",
      [](const std::string& cfg, std::optional<double> epsilon, bool search) {
        StabilityTestOptions o;
        o.epsilon = epsilon;
        o.search = search;
        return dump(to_json(stability_test(config_from(cfg).system, o)));
      },
      py::arg("config"), py::arg("epsilon") = py::none(), py::arg("search") = false);

  m.def(
      "n_epsilon",
      [](std::function<double(long)> term, double eps) {
        Sequence s{std::move(term), {}, 0.0};
        return n_epsilon(s, eps);
      },
      py::arg("term"), py::arg("eps"), "Least k with sum_{m >= k} term(m) < eps, for a convergent series.");

  m.def(
      "wio_evaluate",
      [](const std::string& cfg, const std::string& kind, double t, int y, int h, std::vector<double> x,
         double gamma, double beta, double c) {
        return wio_evaluate(config_from(cfg).system, lyapunov_from(kind, gamma, beta, c), t, y, h, x);
      },
      py::arg("config"), py::arg("kind"), py::arg("t"), py::arg("y"), py::arg("h"), py::arg("x"),
      py::arg("gamma") = 1.0, py::arg("beta") = 2.0, py::arg("c") = 1.0);

  m.def(
      "verify_bound",
      [](const std::string& cfg, std::size_t segment, std::size_t n_paths, std::uint64_t seed, unsigned threads) {
        RunConfig c = config_from(cfg);
        py::gil_scoped_release release;
        Simulator sim(c.system, c.integrator);
        return dump(to_json(verify_segment_bound(sim, segment, n_paths, RngPolicy{seed}, threads)));
      },
      py::arg("config"), py::arg("segment"), py::arg("n_paths"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "probe_mean_square",
      [](const std::string& cfg, std::vector<double> times, std::size_t n_paths, std::uint64_t seed,
         unsigned threads) {
        RunConfig c = config_from(cfg);
        py::gil_scoped_release release;
        return dump(to_json(probe_mean_square(c.system, c.integrator, times, n_paths, RngPolicy{seed}, threads)));
      },
      py::arg("config"), py::arg("times"), py::arg("n_paths"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "probe_probability",
      [](const std::string& cfg, double eps1, double horizon, std::size_t n_paths, std::vector<double> deltas,
         std::uint64_t seed, unsigned threads) {
        RunConfig c = config_from(cfg);
        py::gil_scoped_release release;
        return dump(to_json(probe_stability_in_probability(c.system, c.integrator, eps1, horizon, n_paths, deltas,
                                                           RngPolicy{seed}, threads)));
      },
      py::arg("config"), py::arg("eps1"), py::arg("horizon"), py::arg("n_paths"), py::arg("deltas"),
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "probe_supermartingale",
      [](const std::string& cfg, double gamma, double beta, std::size_t k_first, std::size_t k_last,
         std::size_t n_outer, std::size_t n_inner, std::uint64_t seed, unsigned threads) {
        RunConfig c = config_from(cfg);
        py::gil_scoped_release release;
        Simulator sim(c.system, c.integrator);
        return dump(to_json(probe_supermartingale(sim, LyapunovSpec::power(gamma, beta), k_first, k_last, n_outer,
                                                  n_inner, RngPolicy{seed}, threads)));
      },
      py::arg("config"), py::arg("gamma"), py::arg("beta"), py::arg("k_first"), py::arg("k_last"),
      py::arg("n_outer"), py::arg("n_inner"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "detect_blowup",
      [](const std::string& cfg, std::vector<long> k_max, double horizon, std::size_t n_paths, std::uint64_t seed,
         unsigned threads) {
        RunConfig c = config_from(cfg);
        py::gil_scoped_release release;
        return dump(to_json(detect_blowup(c.system, c.integrator, k_max, horizon, n_paths, RngPolicy{seed}, threads)));
      },
      py::arg("config"), py::arg("k_max"), py::arg("horizon"), py::arg("n_paths"), py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::ostringstream out, err;
        int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));

  m.attr("__version__") = ZENOSDE_VERSION;
}
