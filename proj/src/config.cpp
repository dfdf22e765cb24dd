#include "zenosde/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "zenosde/error.hpp"

namespace zenosde {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, "field '" + path + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  ok.insert("source");
  ok.insert("comment");
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) fail(join(path, key), "unknown key");
    if ((key == "source" || key == "comment") && !value.is_string()) fail(join(path, key), "expected a string");
  }
}

double get_number(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(join(path, key), "missing");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  return obj.contains(key) ? get_number(obj, path, key) : fallback;
}

long get_integer(const json& obj, const std::string& path, const char* key, long fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(join(path, key), "missing");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<long>();
}

bool get_bool_or(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) fail(join(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(join(path, key), "missing");
  if (!obj.at(key).is_string()) fail(join(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

std::vector<double> number_array(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Matrix matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of rows");
  Matrix m;
  for (std::size_t i = 0; i < v.size(); ++i) m.push_back(number_array(v[i], path + "[" + std::to_string(i) + "]"));
  return m;
}

const json& required(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail(join(path, key), "missing");
  return obj.at(key);
}

CoefficientFamily parse_coefficients(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "coefficients"});
  CoefficientFamily f;
  std::string kind = j.contains("kind") ? get_string(j, path, "kind") : "linear";
  if (kind == "linear") f.kind = CoefficientFamily::Kind::Linear;
  else if (kind == "constant") f.kind = CoefficientFamily::Kind::Constant;
  else fail(join(path, "kind"), "expected 'linear' or 'constant', got '" + kind + "'");
  f.coefficients = number_array(required(j, path, "coefficients"), join(path, "coefficients"));
  if (f.coefficients.empty()) fail(join(path, "coefficients"), "needs one value per regime");
  return f;
}

JumpFamily parse_jump(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "alpha", "scale", "sign", "maps", "L_seq", "gamma_seq"});
  JumpFamily f;
  std::string kind = get_string(j, path, "kind");
  if (kind == "zero") {
    f.kind = JumpFamily::Kind::Zero;
  } else if (kind == "scale-poly") {
    f.kind = JumpFamily::Kind::ScalePoly;
  } else if (kind == "exp-mark-clamped") {
    f.kind = JumpFamily::Kind::ExpMarkClamped;
    f.alpha = get_number(j, path, "alpha");
    f.scale = get_number_or(j, path, "scale", 1.0);
    f.sign = static_cast<int>(get_integer(j, path, "sign", -1));
    if (f.sign != 1 && f.sign != -1) fail(join(path, "sign"), "expected +1 or -1");
    if (!(f.alpha > 0.0)) fail(join(path, "alpha"), "must be positive");
  } else if (kind == "custom-sequence") {
    f.kind = JumpFamily::Kind::CustomSequence;
    const json& maps = required(j, path, "maps");
    if (!maps.is_array()) fail(join(path, "maps"), "expected an array");
    for (std::size_t i = 0; i < maps.size(); ++i) {
      std::string p = join(path, "maps") + "[" + std::to_string(i) + "]";
      check_keys(maps[i], p, {"k", "slope", "offset"});
      JumpMap m;
      m.k = get_integer(maps[i], p, "k", 0, true);
      if (m.k < 1) fail(join(p, "k"), "must be >= 1");
      m.slope = get_number_or(maps[i], p, "slope", 0.0);
      m.offset = get_number_or(maps[i], p, "offset", 0.0);
      f.maps.push_back(m);
    }
    if (j.contains("L_seq")) f.lipschitz_seq = number_array(j.at("L_seq"), join(path, "L_seq"));
    if (j.contains("gamma_seq")) f.sup_seq = number_array(j.at("gamma_seq"), join(path, "gamma_seq"));
  } else {
    fail(join(path, "kind"), "unknown jump family '" + kind + "'");
  }
  return f;
}

JumpSchedule parse_schedule(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "times", "t_star", "c", "alpha", "k_max", "delta_min"});
  JumpSchedule s;
  std::string kind = get_string(j, path, "kind");
  if (kind == "explicit-list") {
    s.kind = JumpSchedule::Kind::ExplicitList;
    s.times = number_array(required(j, path, "times"), join(path, "times"));
  } else if (kind == "harmonic-to-point") {
    s.kind = JumpSchedule::Kind::HarmonicToPoint;
    s.t_star = get_number(j, path, "t_star");
    s.c = get_number_or(j, path, "c", 1.0);
    if (!(s.c > 0.0)) fail(join(path, "c"), "must be positive");
  } else if (kind == "harmonic-to-zero") {
    s.kind = JumpSchedule::Kind::HarmonicToZero;
    s.alpha = get_number(j, path, "alpha");
    if (!(s.alpha > 0.0)) fail(join(path, "alpha"), "must be positive");
  } else {
    fail(join(path, "kind"), "unknown schedule kind '" + kind + "'");
  }
  s.k_max = get_integer(j, path, "k_max", 200);
  if (s.k_max < 1) fail(join(path, "k_max"), "must be >= 1");
  s.delta_min = get_number_or(j, path, "delta_min", 1e-9);
  if (!(s.delta_min >= 0.0)) fail(join(path, "delta_min"), "must be >= 0");
  return s;
}

IntegratorConfig parse_integrator(const json& j, const std::string& path) {
  check_keys(j, path, {"dt_max", "refine_near_star", "min_substeps", "record_stride", "overflow_threshold"});
  IntegratorConfig c;
  c.dt_max = get_number_or(j, path, "dt_max", c.dt_max);
  c.refine_near_star = get_bool_or(j, path, "refine_near_star", c.refine_near_star);
  c.min_substeps = static_cast<int>(get_integer(j, path, "min_substeps", c.min_substeps));
  long stride = get_integer(j, path, "record_stride", static_cast<long>(c.record_stride));
  if (stride < 1) fail(join(path, "record_stride"), "must be >= 1");
  c.record_stride = static_cast<std::size_t>(stride);
  c.overflow_threshold = get_number_or(j, path, "overflow_threshold", c.overflow_threshold);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return c;
}

const char* coefficient_kind(CoefficientFamily::Kind k) {
  return k == CoefficientFamily::Kind::Linear ? "linear" : "constant";
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, "", {"name", "drift", "diffusion", "jump", "schedule", "xi_generator", "eta_transition", "initial",
                     "horizon", "integrator"});
  RunConfig cfg;
  if (j.contains("name")) cfg.name = get_string(j, "", "name");
  SystemSpec& s = cfg.system;
  s.drift = parse_coefficients(required(j, "", "drift"), "drift");
  s.diffusion = parse_coefficients(required(j, "", "diffusion"), "diffusion");
  if (j.contains("jump")) s.jump = parse_jump(j.at("jump"), "jump");
  if (j.contains("schedule")) {
    s.schedule = parse_schedule(j.at("schedule"), "schedule");
  } else {
    s.schedule.kind = JumpSchedule::Kind::ExplicitList;
  }

  // Single-regime systems may omit the generator.
  static const json kNoSwitching = {{"rates", {{0.0}}}};
  const json& xi = j.contains("xi_generator") ? j.at("xi_generator") : kNoSwitching;
  check_keys(xi, "xi_generator", {"rates", "switch_kernel"});
  try {
    s.xi = validate_generator(matrix(required(xi, "xi_generator", "rates"), "xi_generator.rates"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    fail("xi_generator.rates", e.what());
  }
  if (xi.contains("switch_kernel")) {
    const json& k = xi.at("switch_kernel");
    if (!k.is_array()) fail("xi_generator.switch_kernel", "expected an array");
    for (std::size_t i = 0; i < k.size(); ++i) {
      std::string p = "xi_generator.switch_kernel[" + std::to_string(i) + "]";
      check_keys(k[i], p, {"from", "to", "scale", "shift"});
      SwitchRule r;
      r.from = static_cast<int>(get_integer(k[i], p, "from", 0, true));
      r.to = static_cast<int>(get_integer(k[i], p, "to", 0, true));
      r.scale = get_number_or(k[i], p, "scale", 1.0);
      r.shift = get_number_or(k[i], p, "shift", 0.0);
      s.switch_kernel.push_back(r);
    }
  }

  if (j.contains("eta_transition")) {
    const json& eta = j.at("eta_transition");
    check_keys(eta, "eta_transition", {"matrix", "per_step", "values"});
    if (eta.contains("matrix") == eta.contains("per_step")) {
      fail("eta_transition", "give exactly one of 'matrix' or 'per_step'");
    }
    try {
      if (eta.contains("matrix")) {
        s.eta = validate_transition(matrix(eta.at("matrix"), "eta_transition.matrix"));
      } else {
        const json& steps = eta.at("per_step");
        if (!steps.is_array() || steps.empty()) fail("eta_transition.per_step", "expected a non-empty array of matrices");
        std::vector<Matrix> ms;
        for (std::size_t i = 0; i < steps.size(); ++i) {
          ms.push_back(matrix(steps[i], "eta_transition.per_step[" + std::to_string(i) + "]"));
        }
        s.eta = validate_transition(ms);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigInvalid) throw;
      fail("eta_transition", e.what());
    }
    if (eta.contains("values")) s.mark_values = number_array(eta.at("values"), "eta_transition.values");
  }

  const json& init = required(j, "", "initial");
  check_keys(init, "initial", {"x0", "y0", "h0"});
  s.x0 = number_array(required(init, "initial", "x0"), "initial.x0");
  s.y0 = static_cast<int>(get_integer(init, "initial", "y0", 1));
  s.h0 = static_cast<int>(get_integer(init, "initial", "h0", 1));

  if (j.contains("horizon")) cfg.horizon = get_number(j, "", "horizon");
  if (!(cfg.horizon > 0.0)) fail("horizon", "must be positive");
  if (j.contains("integrator")) cfg.integrator = parse_integrator(j.at("integrator"), "integrator");

  s.validate();
  return cfg;
}

RunConfig parse_config_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::ConfigInvalid,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return parse_config(j);
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json config_to_json(const RunConfig& cfg) {
  const SystemSpec& s = cfg.system;
  json j;
  if (!cfg.name.empty()) j["name"] = cfg.name;
  j["drift"] = {{"kind", coefficient_kind(s.drift.kind)}, {"coefficients", s.drift.coefficients}};
  j["diffusion"] = {{"kind", coefficient_kind(s.diffusion.kind)}, {"coefficients", s.diffusion.coefficients}};

  json jump;
  switch (s.jump.kind) {
    case JumpFamily::Kind::Zero: jump["kind"] = "zero"; break;
    case JumpFamily::Kind::ScalePoly: jump["kind"] = "scale-poly"; break;
    case JumpFamily::Kind::ExpMarkClamped:
      jump = {{"kind", "exp-mark-clamped"}, {"alpha", s.jump.alpha}, {"scale", s.jump.scale}, {"sign", s.jump.sign}};
      break;
    case JumpFamily::Kind::CustomSequence: {
      jump["kind"] = "custom-sequence";
      jump["maps"] = json::array();
      for (const auto& m : s.jump.maps) jump["maps"].push_back({{"k", m.k}, {"slope", m.slope}, {"offset", m.offset}});
      if (s.jump.lipschitz_seq) jump["L_seq"] = *s.jump.lipschitz_seq;
      if (s.jump.sup_seq) jump["gamma_seq"] = *s.jump.sup_seq;
      break;
    }
  }
  j["jump"] = jump;

  json sched;
  switch (s.schedule.kind) {
    case JumpSchedule::Kind::ExplicitList: sched = {{"kind", "explicit-list"}, {"times", s.schedule.times}}; break;
    case JumpSchedule::Kind::HarmonicToPoint:
      sched = {{"kind", "harmonic-to-point"}, {"t_star", s.schedule.t_star}, {"c", s.schedule.c}};
      break;
    case JumpSchedule::Kind::HarmonicToZero: sched = {{"kind", "harmonic-to-zero"}, {"alpha", s.schedule.alpha}}; break;
  }
  sched["k_max"] = s.schedule.k_max;
  sched["delta_min"] = s.schedule.delta_min;
  j["schedule"] = sched;

  json xi = {{"rates", s.xi.rates()}};
  xi["switch_kernel"] = json::array();
  for (const auto& r : s.switch_kernel) {
    xi["switch_kernel"].push_back({{"from", r.from}, {"to", r.to}, {"scale", r.scale}, {"shift", r.shift}});
  }
  j["xi_generator"] = xi;

  json eta;
  if (s.eta.n_steps() == 1) eta["matrix"] = s.eta.steps().front();
  else eta["per_step"] = s.eta.steps();
  std::vector<double> values;
  for (int h = 1; h <= static_cast<int>(s.n_marks()); ++h) values.push_back(s.mark_value(h));
  eta["values"] = values;
  j["eta_transition"] = eta;

  j["initial"] = {{"x0", s.x0}, {"y0", s.y0}, {"h0", s.h0}};
  j["horizon"] = cfg.horizon;
  const IntegratorConfig& c = cfg.integrator;
  j["integrator"] = {{"dt_max", c.dt_max},
                     {"refine_near_star", c.refine_near_star},
                     {"min_substeps", c.min_substeps},
                     {"record_stride", c.record_stride},
                     {"overflow_threshold", c.overflow_threshold}};
  return j;
}

std::vector<std::string> preset_names() { return {"intro", "case1", "case2", "case3"}; }

json preset_json(std::string_view name) {
  const char* unspecified = "default-unspecified";
  json integrator = {{"dt_max", 1e-3},
                     {"refine_near_star", true},
                     {"min_substeps", 2},
                     {"record_stride", 1},
                     {"overflow_threshold", 1e12},
                     {"source", "tool defaults"}};

  if (name == "intro") {
    return json{
        {"name", "intro"},
        {"comment", "dx = -x dt with jumps x(t_k) = x(t_k-)(1 + k^2) at t_k = alpha / k; blows up as truncation is lifted"},
        {"drift", {{"kind", "linear"}, {"coefficients", {-1.0}}, {"source", "dx = -x dt"}}},
        {"diffusion", {{"kind", "linear"}, {"coefficients", {0.0}}, {"source", "deterministic"}}},
        {"jump", {{"kind", "scale-poly"}, {"source", "x(t_k) = x(t_k-)(1 + k^2)"}}},
        {"schedule",
         {{"kind", "harmonic-to-zero"}, {"alpha", 1.0}, {"k_max", 200}, {"delta_min", 1e-9},
          {"source", "t_k = alpha / k with alpha = 1; truncation from tool defaults"}}},
        {"xi_generator", {{"rates", {{0.0}}}, {"source", "single regime"}}},
        {"eta_transition", {{"matrix", {{1.0}}}, {"values", {1.0}}, {"source", "marks unused by this jump family"}}},
        {"initial", {{"x0", {10.0}}, {"y0", 1}, {"h0", 1}, {"source", "x(0) = 10 as in the linear model example"}}},
        {"horizon", 1.0},
        {"integrator", integrator},
    };
  }

  double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
  int sign = -1;
  std::string label;
  if (name == "case1") {
    a1 = 1.0, a2 = -0.5, b1 = 0.3, b2 = 2.1;
    label = "case 1 (condition on a_i - b_i^2/2 fails for regime 1)";
  } else if (name == "case2") {
    a1 = -1.0, a2 = 0.5, b1 = 0.3, b2 = 2.0;
    label = "case 2 (all stability conditions hold)";
  } else if (name == "case3") {
    a1 = -1.0, a2 = 0.5, b1 = 0.3, b2 = 2.0, sign = 1;
    label = "case 3 (case 2 coefficients, growing impulses)";
  } else {
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(name) + "'");
  }
  std::string impulse = sign < 0 ? "x(t_k) = x(t_k-) + exp(-alpha k eta_k) min(x(t_k-), 1), alpha = 1.673"
                                 : "x(t_k) = x(t_k-) + exp(+alpha k eta_k) min(x(t_k-), 1), alpha = 1.673";
  return json{
      {"name", std::string(name)},
      {"comment", "linear two-regime model example, " + label},
      {"drift", {{"kind", "linear"}, {"coefficients", {a1, a2}}, {"source", "model example " + label + ": drift a(xi)"}}},
      {"diffusion",
       {{"kind", "linear"}, {"coefficients", {b1, b2}}, {"source", "model example " + label + ": diffusion b(xi)"}}},
      {"jump", {{"kind", "exp-mark-clamped"}, {"alpha", 1.673}, {"scale", 1.0}, {"sign", sign}, {"source", impulse}}},
      {"schedule",
       {{"kind", "harmonic-to-point"}, {"t_star", 2.0}, {"c", 1.0}, {"k_max", 200}, {"delta_min", 1e-9},
        {"source", "t_k = 2 - 1/k, concentration point 2; truncation from tool defaults"}}},
      {"xi_generator",
       {{"rates", {{-1.0, 1.0}, {1.0, -1.0}}}, {"source", unspecified}, {"comment", "symmetric rate-1 generator"}}},
      {"eta_transition",
       {{"matrix", {{0.5, 0.5}, {0.5, 0.5}}}, {"values", {1.0, 2.0}},
        {"source", std::string(unspecified) + " (transition matrix); marks eta_k in {1, 2} from the model example"}}},
      {"initial",
       {{"x0", {10.0}}, {"y0", 1}, {"h0", 1},
        {"source", "x(0) = 10, eta_0 = 1 from the model example; y0 = 1 " + std::string(unspecified)}}},
      {"horizon", 5.0},
      {"integrator", integrator},
  };
}

RunConfig preset(std::string_view name) { return parse_config(preset_json(name)); }

}  // namespace zenosde
