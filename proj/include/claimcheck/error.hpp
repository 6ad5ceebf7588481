#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace claimcheck {

enum class ErrorCode {
  EmptyInput,
  InvalidConfig,
  NotFound,
  NetworkError,
  RateLimited,
  BackendError,
  Timeout,
  DimensionMismatch,
  EmptyCorpus,
  MissingIndex,
  ParseError,
  UnknownLabel,
  LengthMismatch,
  MissingOrigin,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Timeouts count as backend failures for degraded-mode handling.
  bool is_backend_failure() const noexcept {
    return code_ == ErrorCode::BackendError || code_ == ErrorCode::Timeout ||
           code_ == ErrorCode::NetworkError || code_ == ErrorCode::RateLimited;
  }

 private:
  ErrorCode code_;
};

}  // namespace claimcheck
