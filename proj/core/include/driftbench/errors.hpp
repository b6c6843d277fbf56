#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftbench {

/// Machine-readable failure category carried by every library error.
enum class ErrorCode {
  format,
  empty_input,
  duplicate_timestamp,
  range,
  insufficient_data,
  insufficient_samples,
  shape,
  config,
  input,
  ordering,
  validation,
  authorization,
  precondition,
  no_usable_model,
  not_found,
  forbidden,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type thrown across the library. `field()` names the offending
/// input field or parameter when one is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace driftbench
