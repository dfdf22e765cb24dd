#pragma once

#include <cmath>
#include <vector>

#include "zenosde/config.hpp"
#include "zenosde/system.hpp"

namespace zt {

using namespace zenosde;

// Single-regime linear system without impulses.
inline SystemSpec linear(double a, double b, double x0) {
  SystemSpec s;
  s.drift = {CoefficientFamily::Kind::Linear, {a}};
  s.diffusion = {CoefficientFamily::Kind::Linear, {b}};
  s.jump.kind = JumpFamily::Kind::Zero;
  s.schedule.kind = JumpSchedule::Kind::ExplicitList;
  s.schedule.times = {};
  s.x0 = {x0};
  return s;
}

// a = b = 0, zero jumps at the given times.
inline SystemSpec frozen(double x0, std::vector<double> times = {}) {
  SystemSpec s = linear(0.0, 0.0, x0);
  s.schedule.times = std::move(times);
  return s;
}

inline SystemSpec case_preset(const char* name) { return preset(name).system; }

inline double sq(double v) { return v * v; }

}  // namespace zt
