#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zenosde::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kIoError = 2;
inline constexpr int kExploded = 3;
inline constexpr int kFinding = 4;

int run(int argc, char** argv);
/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zenosde::cli
