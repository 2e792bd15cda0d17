#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nfde {

enum class ErrorKind {
  GridMismatch,
  OffGridAtom,
  OffGridShift,
  InvalidMeasure,
  InvalidHistory,
  InvalidModel,
  MassAtZero,
  NotContractive,
  NoConvergence,
  IncompatibleInitialData,
  ValidationFailure,
  HorizonExceeded,
  OrderViolation,
  NoPath,
  Precondition,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace nfde
