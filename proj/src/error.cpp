#include "ascf/error.hpp"

namespace ascf {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::manifest: return "manifest error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::label: return "label error";
    case ErrorKind::missing_value: return "missing value";
    case ErrorKind::stratification: return "stratification error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::invalid_acquisition: return "invalid acquisition";
    case ErrorKind::already_acquired: return "already acquired";
    case ErrorKind::precondition: return "precondition violated";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::single_class: return "single-class input";
    case ErrorKind::exhausted: return "candidate pool exhausted";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::pairing: return "pairing error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::busy: return "busy";
    case ErrorKind::unknown_id: return "unknown id";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace ascf
