#pragma once

#include <stdexcept>
#include <string>

namespace ascf {

enum class ErrorKind {
  manifest,
  parse,
  label,
  missing_value,
  stratification,
  shape,
  invalid_acquisition,
  already_acquired,
  precondition,
  domain,
  single_class,
  exhausted,
  contract,
  pairing,
  io,
  busy,
  unknown_id,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ascf
