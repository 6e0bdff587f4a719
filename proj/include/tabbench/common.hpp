#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tabbench {

// Error taxonomy shared by all modules. Each condition the engine treats as
// recoverable-by-caller carries its own kind so tests and the CLI can react
// without string matching.
enum class ErrorKind {
  MalformedFile,
  MissingTargets,
  EmptyDataset,
  DimensionMismatch,
  ShapeMismatch,
  NumericalFailure,
  SingularSystem,
  RankDeficient,
  InvalidSpec,
  TooFewSamples,
  ZeroVariance,
  IncompleteGrid,
  InvalidConfig,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::MissingTargets: return "MissingTargets";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::IncompleteGrid: return "IncompleteGrid";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace tabbench
