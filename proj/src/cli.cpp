#include "zenosde/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "parallel.hpp"
#include "zenosde/analysis.hpp"
#include "zenosde/config.hpp"
#include "zenosde/error.hpp"
#include "zenosde/lyapunov.hpp"
#include "zenosde/serialize.hpp"

namespace zenosde::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Everything that determines the outputs of a command. Written to the
// manifest fully resolved, so a replay never depends on defaults.
struct Params {
  std::string command;
  std::string kind;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  double horizon = 0.0;
  double epsilon = 0.1;
  bool search_epsilon = false;
  std::size_t segment = 1;
  std::vector<long> kmax{5, 10, 20};
  double eps1 = 5.0;
  std::vector<double> deltas{1.0, 0.1, 0.01};
  std::vector<double> times;
  std::size_t inner = 100;
  std::size_t k_first = 1;
  std::size_t k_last = 20;
  double gamma = 1.0;
  double beta = 0.0;  // 0: epsilon / b_max^2
};

json params_json(const Params& p) {
  return {{"command", p.command}, {"kind", p.kind},       {"seed", p.seed},         {"paths", p.paths},
          {"horizon", p.horizon}, {"epsilon", p.epsilon}, {"search_epsilon", p.search_epsilon},
          {"segment", p.segment}, {"kmax", p.kmax},       {"eps1", p.eps1},         {"deltas", p.deltas},
          {"times", p.times},     {"inner", p.inner},     {"k_first", p.k_first},   {"k_last", p.k_last},
          {"gamma", p.gamma},     {"beta", p.beta}};
}

Params params_from_json(const json& j) {
  Params p;
  p.command = j.at("command").get<std::string>();
  p.kind = j.at("kind").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.paths = j.at("paths").get<std::size_t>();
  p.horizon = j.at("horizon").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.search_epsilon = j.at("search_epsilon").get<bool>();
  p.segment = j.at("segment").get<std::size_t>();
  p.kmax = j.at("kmax").get<std::vector<long>>();
  p.eps1 = j.at("eps1").get<double>();
  p.deltas = j.at("deltas").get<std::vector<double>>();
  p.times = j.at("times").get<std::vector<double>>();
  p.inner = j.at("inner").get<std::size_t>();
  p.k_first = j.at("k_first").get<std::size_t>();
  p.k_last = j.at("k_last").get<std::size_t>();
  p.gamma = j.at("gamma").get<double>();
  p.beta = j.at("beta").get<double>();
  return p;
}

std::string timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  // Opens a file for writing; the name goes into the manifest inventory.
  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return f;
  }

  void write(const std::string& name, const std::string& content) {
    auto f = open(name);
    f << content;
    if (!f) throw Error(ErrorCode::Io, "write failed for " + (dir_ / name).string());
  }

  void add(const std::string& name) { files_.push_back(name); }
  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_manifest(Outputs& outs, const RunConfig& cfg, const Params& p, unsigned threads,
                    const std::vector<std::string>& args) {
  json m;
  m["tool"] = "zenosde";
  m["version"] = ZENOSDE_VERSION;
  m["timestamp"] = timestamp();
  m["args"] = args;
  m["threads"] = threads;
  m["parameters"] = params_json(p);
  m["config"] = config_to_json(cfg);
  m["outputs"] = outs.files();
  std::ofstream f(outs.dir() / "manifest.json", std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write manifest in " + outs.dir().string());
  f << m.dump(2) << "\n";
}

double default_probe_horizon(const RunConfig& cfg) {
  const auto& s = cfg.system.schedule;
  if (s.accumulating()) return s.concentration_point() + 3.0;
  return cfg.horizon;
}

int cmd_simulate(const RunConfig& cfg, const Params& p, unsigned threads, Outputs& outs, std::ostream& out) {
  Simulator sim(cfg.system, cfg.integrator);
  RngPolicy policy{p.seed};
  std::vector<std::string> names(p.paths);
  for (std::size_t i = 0; i < p.paths; ++i) names[i] = "traj_" + std::to_string(i) + ".csv";
  std::vector<json> status(p.paths);
  detail::parallel_for(p.paths, threads, [&](std::size_t i) {
    Trajectory traj = sim.simulate_path(p.horizon, i, policy);
    std::ofstream f(outs.dir() / names[i], std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (outs.dir() / names[i]).string());
    write_trajectory_csv(f, traj);
    status[i] = {{"path", i},
                 {"file", names[i]},
                 {"status", traj.status == PathStatus::Exploded ? "exploded" : "completed"},
                 {"exploded_at", number(traj.exploded_at)},
                 {"sup_norm", number(traj.sup_norm)},
                 {"jumps", traj.jumps.size()}};
  });
  std::size_t exploded = 0;
  for (std::size_t i = 0; i < p.paths; ++i) {
    outs.add(names[i]);
    if (status[i]["status"] == "exploded") ++exploded;
  }
  json summary = {{"horizon", p.horizon},
                  {"seed", p.seed},
                  {"jumps_scheduled", sim.n_jumps()},
                  {"jumps_truncated", sim.schedule().truncated},
                  {"paths", status},
                  {"exploded", exploded}};
  outs.write("summary.json", summary.dump(2) + "\n");
  out << p.paths << " path(s) on [0, " << p.horizon << "], " << exploded << " exploded, written to "
      << outs.dir().string() << "\n";
  return exploded > 0 ? kExploded : kOk;
}

int cmd_check(const RunConfig& cfg, const Params& p, bool as_json, Outputs* outs, std::ostream& out) {
  json report;
  std::ostringstream text;
  bool pass = true;
  try {
    ConditionReport cr = check_conditions(cfg.system, default_eps_grid());
    report["conditions"] = to_json(cr);
    text << to_text(cr);
    pass = pass && cr.all_pass();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnsupportedFamily) throw;
    report["conditions"] = {{"available", false}, {"reason", e.what()}};
    text << "conditions: not available (" << e.what() << ")\n";
    pass = false;
  }
  text << "\n";
  try {
    StabilityTestOptions opts;
    opts.epsilon = p.epsilon;
    opts.search = p.search_epsilon;
    StabilityTestReport tr = stability_test(cfg.system, opts);
    report["stability_test"] = to_json(tr);
    text << to_text(tr);
    pass = pass && tr.pass;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnsupportedFamily && e.code() != ErrorCode::ZeroDiffusion) throw;
    report["stability_test"] = {{"available", false}, {"reason", e.what()}};
    text << "stability test: not applicable (" << e.what() << ")\n";
    pass = false;
  }
  report["pass"] = pass;
  if (outs) outs->write("report.json", report.dump(2) + "\n");
  if (as_json) {
    out << report.dump(2) << "\n";
  } else {
    out << text.str() << "\noverall: " << (pass ? "pass" : "FAIL") << "\n";
  }
  return pass ? kOk : kFinding;
}

int cmd_probe(const RunConfig& cfg, const Params& p, unsigned threads, bool as_json, Outputs& outs,
              std::ostream& out) {
  RngPolicy policy{p.seed};
  json report;
  std::string text;
  bool verdict = true;
  if (p.kind == "bound") {
    Simulator sim(cfg.system, cfg.integrator);
    BoundCheckResult r = verify_segment_bound(sim, p.segment, p.paths, policy, threads);
    report = to_json(r);
    text = to_text(r);
    verdict = r.pass;
  } else if (p.kind == "prob") {
    StabilityProbeResult r =
        probe_stability_in_probability(cfg.system, cfg.integrator, p.eps1, p.horizon, p.paths, p.deltas, policy, threads);
    report = to_json(r);
    text = to_text(r);
    verdict = r.verdict;
    auto f = outs.open("probe.csv");
    write_probe_csv(f, r);
  } else if (p.kind == "meansq") {
    StabilityProbeResult r = probe_mean_square(cfg.system, cfg.integrator, p.times, p.paths, policy, threads);
    report = to_json(r);
    text = to_text(r);
    verdict = r.verdict;
    auto f = outs.open("meansq.csv");
    write_probe_csv(f, r);
  } else if (p.kind == "supermartingale") {
    Simulator sim(cfg.system, cfg.integrator);
    double beta = p.beta;
    if (beta <= 0.0) {
      StabilityTestOptions opts;
      opts.epsilon = p.epsilon;
      beta = stability_test(cfg.system, opts).beta;
    }
    LyapunovSpec v = LyapunovSpec::power(p.gamma, beta);
    SupermartingaleResult r = probe_supermartingale(sim, v, p.k_first, p.k_last, p.paths, p.inner, policy, threads);
    report = to_json(r);
    report["gamma"] = p.gamma;
    report["beta"] = beta;
    text = to_text(r);
    verdict = r.verdict;
    auto f = outs.open("supermartingale.csv");
    write_supermartingale_csv(f, r);
  } else if (p.kind == "blowup") {
    BlowupReport r = detect_blowup(cfg.system, cfg.integrator, p.kmax, p.horizon, p.paths, policy, threads);
    report = to_json(r);
    text = to_text(r);
    auto f = outs.open("blowup.csv");
    write_blowup_csv(f, r);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown probe kind '" + p.kind +
                                                "' (bound, prob, meansq, supermartingale, blowup)");
  }
  outs.write("report.json", report.dump(2) + "\n");
  if (as_json) {
    out << report.dump(2) << "\n";
  } else {
    out << text;
  }
  return verdict ? kOk : kFinding;
}

int execute(const RunConfig& cfg, Params p, unsigned threads, bool as_json, const std::optional<fs::path>& out_dir,
            const std::vector<std::string>& args, std::ostream& out) {
  if (p.command == "check") {
    if (!out_dir) return cmd_check(cfg, p, as_json, nullptr, out);
    Outputs outs(*out_dir);
    outs.prepare();
    int rc = cmd_check(cfg, p, as_json, &outs, out);
    write_manifest(outs, cfg, p, threads, args);
    return rc;
  }
  Outputs outs(out_dir.value_or(fs::path(".")));
  outs.prepare();
  int rc = p.command == "simulate" ? cmd_simulate(cfg, p, threads, outs, out)
                                   : cmd_probe(cfg, p, threads, as_json, outs, out);
  write_manifest(outs, cfg, p, threads, args);
  return rc;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      T x;
      if constexpr (std::is_integral_v<T>) {
        x = static_cast<T>(std::stoll(item, &used));
      } else {
        x = static_cast<T>(std::stod(item, &used));
      }
      if (used != item.size()) throw std::invalid_argument(item);
      v.push_back(x);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string("empty ") + what + " list");
  return v;
}

int exit_code_for(const Error& e) { return e.code() == ErrorCode::Io ? kIoError : kConfigError; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo toolkit for regime-switching SDEs with impulses at accumulating times", "zenosde"};
  app.set_version_flag("--version", std::string(ZENOSDE_VERSION));
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir, kind = "meansq", kmax_s, deltas_s, times_s, krange_s;
  std::uint64_t seed = 0;
  std::optional<std::size_t> paths;
  std::optional<double> horizon, epsilon, beta;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool as_json = false, search = false;
  Params p;

  auto common = [&](CLI::App* sub) {
    auto* g = sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset_name, "built-in preset")->excludes(g);
    sub->add_option("--threads", threads, "worker threads (outputs do not depend on it)")->check(CLI::PositiveNumber);
  };

  auto* sim = app.add_subcommand("simulate", "simulate trajectories to CSV");
  common(sim);
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--paths", paths, "number of paths");
  sim->add_option("--horizon", horizon, "end time");
  sim->add_option("--out", out_dir, "output directory");

  auto* chk = app.add_subcommand("check", "check sufficient stability conditions");
  common(chk);
  chk->add_option("--epsilon", epsilon, "margin epsilon");
  chk->add_flag("--search-epsilon", search, "search the largest feasible epsilon");
  chk->add_option("--out", out_dir, "write report.json and manifest.json here");
  chk->add_flag("--json", as_json, "print JSON instead of tables");

  auto* prb = app.add_subcommand("probe", "Monte Carlo probes");
  common(prb);
  prb->add_option("--kind", kind, "bound, prob, meansq, supermartingale or blowup");
  prb->add_option("--seed", seed, "master seed");
  prb->add_option("--paths", paths, "paths (outer paths for supermartingale)");
  prb->add_option("--horizon", horizon, "horizon (default: concentration point + 3)");
  prb->add_option("--out", out_dir, "output directory");
  prb->add_option("--segment", p.segment, "segment index for --kind bound");
  prb->add_option("--kmax", kmax_s, "K_max list for --kind blowup, e.g. 5,10,20");
  prb->add_option("--eps1", p.eps1, "exceedance level for --kind prob");
  prb->add_option("--deltas", deltas_s, "initial norms for --kind prob, e.g. 1,0.1,0.01");
  prb->add_option("--times", times_s, "time grid for --kind meansq");
  prb->add_option("--inner", p.inner, "inner paths for --kind supermartingale");
  prb->add_option("--krange", krange_s, "k range for --kind supermartingale, e.g. 1:20");
  prb->add_option("--epsilon", epsilon, "epsilon giving beta = epsilon / b_max^2");
  prb->add_option("--beta", beta, "exponent of the power Lyapunov function");
  prb->add_option("--gamma", p.gamma, "scale of the power Lyapunov function");
  prb->add_flag("--json", as_json, "print JSON instead of tables");

  auto* pre = app.add_subcommand("preset", "print a preset config");
  std::string preset_arg;
  pre->add_option("name", preset_arg, "preset name")->required();

  auto* rep = app.add_subcommand("replay", "rerun the command recorded in a manifest");
  std::string manifest_path;
  rep->add_option("manifest", manifest_path, "manifest.json")->required();
  rep->add_option("--out", out_dir, "output directory (default: <manifest dir>/replay)");
  rep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(ZENOSDE_VERSION) + "\n" : app.help());
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  std::vector<std::string> full_args{"zenosde"};
  full_args.insert(full_args.end(), args.begin(), args.end());
  try {
    if (*pre) {
      out << preset_json(preset_arg).dump(2) << "\n";
      return kOk;
    }
    if (*rep) {
      std::ifstream f(manifest_path);
      if (!f) throw Error(ErrorCode::Io, "cannot open manifest " + manifest_path);
      json m;
      try {
        m = json::parse(f);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, "manifest " + manifest_path + ": " + e.what());
      }
      RunConfig cfg;
      Params rp;
      try {
        cfg = parse_config(m.at("config"));
        rp = params_from_json(m.at("parameters"));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, "manifest " + manifest_path + ": " + e.what());
      }
      fs::path dir = out_dir.empty() ? fs::path(manifest_path).parent_path() / "replay" : fs::path(out_dir);
      std::optional<fs::path> target = dir;
      return execute(cfg, rp, threads, false, target, full_args, out);
    }

    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config_file(config_path);
    } else if (!preset_name.empty()) {
      cfg = preset(preset_name);
    } else {
      throw Error(ErrorCode::ConfigInvalid, "one of --config or --preset is required");
    }

    p.seed = seed;
    if (epsilon) p.epsilon = *epsilon;
    p.search_epsilon = search;
    std::optional<fs::path> target;
    if (!out_dir.empty()) target = fs::path(out_dir);

    if (*sim) {
      p.command = "simulate";
      p.paths = paths.value_or(1);
      p.horizon = horizon.value_or(cfg.horizon);
    } else if (*chk) {
      p.command = "check";
    } else {
      p.command = "probe";
      p.kind = kind;
      p.paths = paths.value_or(1000);
      p.horizon = horizon.value_or(default_probe_horizon(cfg));
      if (!kmax_s.empty()) p.kmax = parse_list<long>(kmax_s, "--kmax");
      if (!deltas_s.empty()) p.deltas = parse_list<double>(deltas_s, "--deltas");
      if (!times_s.empty()) {
        p.times = parse_list<double>(times_s, "--times");
        p.horizon = p.times.back();
      } else if (kind == "meansq") {
        for (int i = 1; i <= 10; ++i) p.times.push_back(p.horizon * i / 10.0);
      }
      if (!krange_s.empty()) {
        auto colon = krange_s.find(':');
        try {
          p.k_first = std::stoul(krange_s.substr(0, colon));
          p.k_last = colon == std::string::npos ? p.k_first : std::stoul(krange_s.substr(colon + 1));
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidArgument, "bad --krange '" + krange_s + "', expected A:B");
        }
      }
      if (beta) p.beta = *beta;
    }
    if (p.command != "check" && !(p.horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    return execute(cfg, p, threads, as_json, target, full_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace zenosde::cli
