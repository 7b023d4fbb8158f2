#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsmc {

enum class ErrorKind {
  invalid_configuration,
  out_of_range,
  degenerate_bracket,
  protocol,
  state,
  format,
  io,
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_configuration: return "invalid-configuration";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::degenerate_bracket: return "degenerate-bracket";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::state: return "state";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wsmc
