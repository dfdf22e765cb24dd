#include "zenosde/rng.hpp"

#include "zenosde/error.hpp"

namespace zenosde {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng RngPolicy::stream(std::initializer_list<std::uint64_t> key) const {
  std::uint64_t h = mix(master_seed);
  for (std::uint64_t part : key) h = mix(h ^ mix(part));
  return Rng(h);
}

PathStreams PathStreams::derive(const RngPolicy& policy, std::uint64_t domain, std::uint64_t index) {
  return PathStreams{policy.stream({domain, index, kChainStream}),
                     policy.stream({domain, index, kMarkStream}),
                     policy.stream({domain, index, kNoiseStream})};
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::RowSumNonZero: return "RowSumNonZero";
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorCode::DivergentTail: return "DivergentTail";
    case ErrorCode::NeverReached: return "NeverReached";
    case ErrorCode::EmptySchedule: return "EmptySchedule";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::MissingDerivatives: return "MissingDerivatives";
    case ErrorCode::ZeroDiffusion: return "ZeroDiffusion";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::ConstantsUnavailable: return "ConstantsUnavailable";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace zenosde
