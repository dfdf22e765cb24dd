#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "zenosde/analysis.hpp"
#include "zenosde/lyapunov.hpp"
#include "zenosde/simulate.hpp"
#include "zenosde/system.hpp"

namespace zenosde {

/// Finite numbers stay numbers; inf and nan become the strings "inf", "-inf", "nan".
nlohmann::json number(double v);

nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const StabilityTestReport& r);
nlohmann::json to_json(const JumpMomentResult& r);
nlohmann::json to_json(const BoundCheckResult& r);
nlohmann::json to_json(const StabilityProbeResult& r);
nlohmann::json to_json(const SupermartingaleResult& r);
nlohmann::json to_json(const BlowupReport& r);
nlohmann::json to_json(const EnsembleSummary& r);

std::string to_text(const ConditionReport& r);
std::string to_text(const StabilityTestReport& r);
std::string to_text(const BoundCheckResult& r);
std::string to_text(const StabilityProbeResult& r);
std::string to_text(const SupermartingaleResult& r);
std::string to_text(const BlowupReport& r);

void write_probe_csv(std::ostream& os, const StabilityProbeResult& r);
void write_supermartingale_csv(std::ostream& os, const SupermartingaleResult& r);
void write_blowup_csv(std::ostream& os, const BlowupReport& r);

}  // namespace zenosde
