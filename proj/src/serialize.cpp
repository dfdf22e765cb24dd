#include "zenosde/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace zenosde {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string csv(double v) { return fmt(v, "%.17g"); }

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

const char* yes_no(bool b) { return b ? "pass" : "FAIL"; }

json check_json(const ConditionCheck& c) {
  return {{"pass", c.pass}, {"value", number(c.value)}, {"detail", c.detail}};
}

json estimate_json(const Estimate& e) {
  return {{"mean", number(e.mean)},
          {"std_error", number(e.std_error)},
          {"n", e.n},
          {"ci_low", number(e.ci_low())},
          {"ci_high", number(e.ci_high())}};
}

json jump_point_json(const JumpMomentPoint& p) {
  return {{"k", p.k}, {"y", p.y}, {"h", p.h}, {"x", number(p.x)}, {"ratio", number(p.ratio)}};
}

}  // namespace

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json to_json(const ConditionReport& r) {
  json eps = json::array();
  for (const auto& row : r.eps_table) {
    eps.push_back({{"eps", number(row.eps)}, {"n_eps", row.n_eps}, {"value", number(row.value)}});
  }
  return {{"C", number(r.constants.C)},
          {"L", number(r.constants.L)},
          {"sum_L_k", number(r.constants.lipschitz.sum)},
          {"sum_gamma_k", number(r.constants.sup_norm.sum)},
          {"growth", check_json(r.growth)},
          {"lipschitz", check_json(r.lipschitz)},
          {"jump_lipschitz", check_json(r.jump_lipschitz)},
          {"jump_summability", check_json(r.jump_summability)},
          {"eps_table", eps},
          {"eps_trend", check_json(r.eps_trend)},
          {"pass", r.all_pass()}};
}

json to_json(const JumpMomentResult& r) {
  json j = {{"pass", r.pass}, {"beta", number(r.beta)}, {"k_max", r.k_max}, {"worst", jump_point_json(r.worst)}};
  j["first_violation"] = r.first_violation ? jump_point_json(*r.first_violation) : json(nullptr);
  return j;
}

json to_json(const StabilityTestReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"regime", row.regime},
                    {"a", number(row.drift)},
                    {"b", number(row.diffusion)},
                    {"margin", number(row.margin)},
                    {"margin_pass", row.margin_pass},
                    {"switching_sum", number(row.switching_sum)},
                    {"rhs", number(row.rhs)},
                    {"switching_pass", row.switching_pass},
                    {"drift_pass", row.drift_pass}});
  }
  return {{"epsilon", number(r.epsilon)},
          {"epsilon_searched", r.epsilon_searched},
          {"epsilon_feasible", r.epsilon_feasible},
          {"b_max", number(r.b_max)},
          {"beta", number(r.beta)},
          {"rows", rows},
          {"jump_moment", to_json(r.jump_moment)},
          {"pass", r.pass}};
}

json to_json(const BoundCheckResult& r) {
  return {{"segment", r.segment},
          {"t_start", number(r.t_start)},
          {"t_end", number(r.t_end)},
          {"next_jump_k", r.next_jump_k},
          {"n_paths", r.n_paths},
          {"lhs", estimate_json(r.lhs)},
          {"lhs_ci_upper", number(r.lhs_ci_upper)},
          {"start_mean_sq", number(r.start_mean_sq)},
          {"C", number(r.C)},
          {"L_next", number(r.L_next)},
          {"rhs", number(r.rhs)},
          {"pass", r.pass}};
}

json to_json(const StabilityProbeResult& r) {
  json pts = json::array();
  const bool ms = r.kind == "mean-square";
  for (const auto& p : r.points) {
    pts.push_back({{ms ? "t" : "delta", number(p.param)},
                   {"estimate", number(p.estimate)},
                   {"std_error", number(p.std_error)},
                   {"ci_low", number(p.estimate - 1.96 * p.std_error)},
                   {"ci_high", number(p.estimate + 1.96 * p.std_error)},
                   {"explosion_fraction", number(p.explosion_fraction)}});
  }
  json j = {{"kind", r.kind},       {"horizon", number(r.horizon)}, {"n_paths", r.n_paths},
            {"points", pts},        {"verdict", r.verdict},         {"verdict_text", r.verdict_text},
            {"note", r.note}};
  if (!ms) j["eps1"] = number(r.eps1);
  return j;
}

json to_json(const SupermartingaleResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"k", row.k},
                    {"v_k", estimate_json(row.v_now)},
                    {"v_k_plus_1", estimate_json(row.v_next)},
                    {"diff", estimate_json(row.diff)},
                    {"pass", row.pass}});
  }
  return {{"n_outer", r.n_outer}, {"n_inner", r.n_inner}, {"rows", rows}, {"verdict", r.verdict}};
}

json to_json(const BlowupReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"k_max", row.k_max},
                    {"n_jumps", row.n_jumps},
                    {"median_sup", number(row.median_sup)},
                    {"max_sup", number(row.max_sup)},
                    {"exploded_fraction", number(row.exploded_fraction)}});
  }
  return {{"horizon", number(r.horizon)}, {"threshold", number(r.threshold)}, {"rows", rows}, {"growth", r.growth}};
}

json to_json(const EnsembleSummary& r) {
  return {{"n_paths", r.n_paths},
          {"n_exploded", r.n_exploded},
          {"median_sup", number(r.median_sup)},
          {"max_sup", number(r.max_sup)}};
}

std::string to_text(const ConditionReport& r) {
  std::ostringstream os;
  auto line = [&](const char* name, const ConditionCheck& c) {
    os << pad(name, 20) << pad(yes_no(c.pass), 6) << pad(fmt(c.value), 16) << c.detail << "\n";
  };
  os << "conditions\n";
  line("growth C", r.growth);
  line("lipschitz L", r.lipschitz);
  line("sum L_k", r.jump_lipschitz);
  line("sum gamma_k", r.jump_summability);
  if (!r.eps_table.empty()) {
    os << pad("eps", 12) << pad("N_eps", 8) << "ln(eps) + N_eps*sum L_k\n";
    for (const auto& row : r.eps_table) {
      os << pad(fmt(row.eps), 12) << pad(std::to_string(row.n_eps), 8) << fmt(row.value) << "\n";
    }
  }
  line("eps trend", r.eps_trend);
  return os.str();
}

std::string to_text(const StabilityTestReport& r) {
  std::ostringstream os;
  os << "stability test  epsilon " << fmt(r.epsilon) << (r.epsilon_searched ? " (searched)" : "") << "  b_max "
     << fmt(r.b_max) << "  beta " << fmt(r.beta) << "\n";
  if (!r.epsilon_feasible) os << "no epsilon on the search grid makes every margin negative\n";
  os << pad("i", 4) << pad("a_i", 10) << pad("b_i", 10) << pad("a_i-b_i^2/2", 16) << pad("", 6)
     << pad("sum(j-i)q_ij", 16) << pad("i(beta*eps+2)/2", 18) << pad("switch", 8) << "drift\n";
  for (const auto& row : r.rows) {
    os << pad(std::to_string(row.regime), 4) << pad(fmt(row.drift), 10) << pad(fmt(row.diffusion), 10)
       << pad(fmt(row.margin), 16) << pad(yes_no(row.margin_pass), 6) << pad(fmt(row.switching_sum), 16)
       << pad(fmt(row.rhs), 18) << pad(yes_no(row.switching_pass), 8) << yes_no(row.drift_pass) << "\n";
  }
  const auto& c = r.jump_moment;
  os << "jump moment condition (k <= " << c.k_max << ", beta " << fmt(c.beta) << "): " << yes_no(c.pass)
     << "  worst ratio " << fmt(c.worst.ratio) << " at k=" << c.worst.k << " y=" << c.worst.y << " h=" << c.worst.h
     << " x=" << fmt(c.worst.x) << "\n";
  if (c.first_violation) {
    const auto& v = *c.first_violation;
    os << "  first violation k=" << v.k << " y=" << v.y << " h=" << v.h << " x=" << fmt(v.x) << " ratio "
       << fmt(v.ratio) << "\n";
  }
  os << "verdict: " << yes_no(r.pass) << "\n";
  return os.str();
}

std::string to_text(const BoundCheckResult& r) {
  std::ostringstream os;
  os << "moment bound on segment " << r.segment << " [" << fmt(r.t_start) << ", " << fmt(r.t_end)
     << "], next jump k=" << r.next_jump_k << ", " << r.n_paths << " paths\n";
  os << "  E sup|x|^2   " << fmt(r.lhs.mean) << " +- " << fmt(r.lhs.std_error) << "  (95% upper " << fmt(r.lhs_ci_upper)
     << ")\n";
  os << "  E|x(t_k)|^2  " << fmt(r.start_mean_sq) << "  C " << fmt(r.C) << "  L_next " << fmt(r.L_next) << "\n";
  os << "  bound        " << fmt(r.rhs) << "\n";
  os << "verdict: " << yes_no(r.pass) << "\n";
  return os.str();
}

std::string to_text(const StabilityProbeResult& r) {
  std::ostringstream os;
  const bool ms = r.kind == "mean-square";
  os << "probe " << r.kind << ", " << r.n_paths << " paths";
  if (!ms) os << ", eps1 " << fmt(r.eps1);
  os << "\n";
  os << "note: " << r.note << "\n";
  os << pad(ms ? "t" : "delta", 12) << pad(ms ? "E|x|^2" : "P(exceed)", 16) << pad("stderr", 14) << "exploded\n";
  for (const auto& p : r.points) {
    os << pad(fmt(p.param), 12) << pad(fmt(p.estimate), 16) << pad(fmt(p.std_error), 14) << fmt(p.explosion_fraction)
       << "\n";
  }
  os << "verdict: " << yes_no(r.verdict) << " (" << r.verdict_text << ")\n";
  return os.str();
}

std::string to_text(const SupermartingaleResult& r) {
  std::ostringstream os;
  os << "supermartingale probe, " << r.n_outer << " outer x " << r.n_inner << " inner\n";
  os << pad("k", 5) << pad("E v_k", 16) << pad("E v_k+1", 16) << pad("diff", 14) << pad("stderr", 14) << "\n";
  for (const auto& row : r.rows) {
    os << pad(std::to_string(row.k), 5) << pad(fmt(row.v_now.mean), 16) << pad(fmt(row.v_next.mean), 16)
       << pad(fmt(row.diff.mean), 14) << pad(fmt(row.diff.std_error), 14) << yes_no(row.pass) << "\n";
  }
  os << "verdict: " << yes_no(r.verdict) << "\n";
  return os.str();
}

std::string to_text(const BlowupReport& r) {
  std::ostringstream os;
  os << "blow-up table, horizon " << fmt(r.horizon) << ", explosion threshold " << fmt(r.threshold) << "\n";
  os << pad("K_max", 8) << pad("jumps", 8) << pad("median sup", 16) << pad("max sup", 16) << "exploded\n";
  for (const auto& row : r.rows) {
    os << pad(std::to_string(row.k_max), 8) << pad(std::to_string(row.n_jumps), 8) << pad(fmt(row.median_sup), 16)
       << pad(fmt(row.max_sup), 16) << fmt(row.exploded_fraction) << "\n";
  }
  os << "verdict: " << (r.growth ? "growth with K_max" : "no blow-up") << "\n";
  return os.str();
}

void write_probe_csv(std::ostream& os, const StabilityProbeResult& r) {
  os << (r.kind == "mean-square" ? "t" : "delta") << ",estimate,stderr,explosion_fraction\n";
  for (const auto& p : r.points) {
    os << csv(p.param) << ',' << csv(p.estimate) << ',' << csv(p.std_error) << ',' << csv(p.explosion_fraction)
       << '\n';
  }
}

void write_supermartingale_csv(std::ostream& os, const SupermartingaleResult& r) {
  os << "k,v_k,v_k_stderr,v_k1,v_k1_stderr,diff,diff_stderr\n";
  for (const auto& row : r.rows) {
    os << row.k << ',' << csv(row.v_now.mean) << ',' << csv(row.v_now.std_error) << ',' << csv(row.v_next.mean) << ','
       << csv(row.v_next.std_error) << ',' << csv(row.diff.mean) << ',' << csv(row.diff.std_error) << '\n';
  }
}

void write_blowup_csv(std::ostream& os, const BlowupReport& r) {
  os << "k_max,n_jumps,median_sup,max_sup,exploded_fraction\n";
  for (const auto& row : r.rows) {
    os << row.k_max << ',' << row.n_jumps << ',' << csv(row.median_sup) << ',' << csv(row.max_sup) << ','
       << csv(row.exploded_fraction) << '\n';
  }
}

}  // namespace zenosde
