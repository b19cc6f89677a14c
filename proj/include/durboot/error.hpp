#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace durboot {

enum class ErrorCode {
  RejectRange,
  RejectAsymmetry,
  NonFinite,
  DegenerateDesign,
  NoConvergence,
  MomentDegenerate,
  HighFailureRate,
  SingularGamma,
  GridMismatch,
  EmptySample,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library's error codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by bad inputs rather than by a failed computation.
  bool is_validation() const noexcept {
    return code_ == ErrorCode::RejectRange || code_ == ErrorCode::RejectAsymmetry ||
           code_ == ErrorCode::Config || code_ == ErrorCode::EmptySample ||
           code_ == ErrorCode::GridMismatch;
  }

 private:
  ErrorCode code_;
};

}  // namespace durboot
