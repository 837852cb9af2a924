#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ovtube {

enum class ErrorCode {
  // geometry
  PointOutsideHull,
  DegenerateTerminal,
  SizeMismatch,
  TooManyVertices,
  InvalidWeights,
  // pathfinder
  InvalidEndpoints,
  NoPathFound,
  HomotopyCheckFailed,
  TooFewSegments,
  // knots
  ZeroChord,
  LengthMismatch,
  ZeroLength,
  // trajopt
  RankDeficient,
  Infeasible,
  Unbounded,
  MaxIterations,
  OutOfDomain,
  // mpcsim
  CoincidentCenters,
  StartOutsideTerminal,
  // scenario-io
  ParseError,
  ValidationError,
  VersionError,
  IoError,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::PointOutsideHull: return "PointOutsideHull";
    case ErrorCode::DegenerateTerminal: return "DegenerateTerminal";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::TooManyVertices: return "TooManyVertices";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::InvalidEndpoints: return "InvalidEndpoints";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::HomotopyCheckFailed: return "HomotopyCheckFailed";
    case ErrorCode::TooFewSegments: return "TooFewSegments";
    case ErrorCode::ZeroChord: return "ZeroChord";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroLength: return "ZeroLength";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::CoincidentCenters: return "CoincidentCenters";
    case ErrorCode::StartOutsideTerminal: return "StartOutsideTerminal";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code. what() is
/// "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace ovtube
