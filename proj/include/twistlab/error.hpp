#pragma once

#include <stdexcept>
#include <string>

namespace twistlab {

/// Failure conditions raised by the library. Each maps to one named error
/// in the operation contracts; the CLI translates them to exit code 2.
enum class ErrorCode {
  // linear algebra / paths
  NonCommuting,
  ClusterAmbiguity,
  DimensionTooSmall,
  PathDegenerate,
  GridMismatch,
  NotSymplectic,
  // spin lifting
  NotUnit,
  StepTooLarge,
  NotClosed,
  // local flows
  NegativeRadius,
  LeftDomain,
  IntegratorFailure,
  NotEmbedding,
  // polynomial layer
  SyntaxError,
  NotHomogeneous,
  ZeroPolynomial,
  BadDegrees,
  BadShape,
  UnknownFamily,
  NoConvergentSamples,
  SingularChartBlock,
  NewtonDivergence,
  // driver
  ConfigError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonCommuting: return "NonCommuting";
    case ErrorCode::ClusterAmbiguity: return "ClusterAmbiguity";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::PathDegenerate: return "PathDegenerate";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NotSymplectic: return "NotSymplectic";
    case ErrorCode::NotUnit: return "NotUnit";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::IntegratorFailure: return "IntegratorFailure";
    case ErrorCode::NotEmbedding: return "NotEmbedding";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::NotHomogeneous: return "NotHomogeneous";
    case ErrorCode::ZeroPolynomial: return "ZeroPolynomial";
    case ErrorCode::BadDegrees: return "BadDegrees";
    case ErrorCode::BadShape: return "BadShape";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::NoConvergentSamples: return "NoConvergentSamples";
    case ErrorCode::SingularChartBlock: return "SingularChartBlock";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace twistlab
