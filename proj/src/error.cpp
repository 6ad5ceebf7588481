#include "claimcheck/error.hpp"

#include <cstdio>

#include "claimcheck/hashing.hpp"

namespace claimcheck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingIndex: return "MissingIndex";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingOrigin: return "MissingOrigin";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace claimcheck
