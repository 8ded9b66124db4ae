#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chx {

enum class ErrorCode {
  invalid_dimension,
  dimension_mismatch,
  basis_mismatch,
  picture_mismatch,
  invalid_basis,
  not_a_state,
  not_completely_positive,
  invalid_channel,
  order_degenerate,
  degenerate_parameter,
  not_a_root,
  retry_with_smaller_delta,
  construction_failed,
  size_cap_exceeded,
  parse_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_dimension: return "invalid-dimension";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::basis_mismatch: return "basis-mismatch";
    case ErrorCode::picture_mismatch: return "picture-mismatch";
    case ErrorCode::invalid_basis: return "invalid-basis";
    case ErrorCode::not_a_state: return "not-a-state";
    case ErrorCode::not_completely_positive: return "not-completely-positive";
    case ErrorCode::invalid_channel: return "invalid-channel";
    case ErrorCode::order_degenerate: return "order-degenerate";
    case ErrorCode::degenerate_parameter: return "degenerate-parameter";
    case ErrorCode::not_a_root: return "not-a-root";
    case ErrorCode::retry_with_smaller_delta: return "retry-with-smaller-delta";
    case ErrorCode::construction_failed: return "construction-failed";
    case ErrorCode::size_cap_exceeded: return "size-cap-exceeded";
    case ErrorCode::parse_error: return "parse-error";
  }
  return "unknown";
}

// Every failing operation in chx throws this; code() is stable and is what
// the CLI reports in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chx
