#include "nfde/error.hpp"

namespace nfde {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::OffGridAtom: return "OffGridAtom";
    case ErrorKind::OffGridShift: return "OffGridShift";
    case ErrorKind::InvalidMeasure: return "InvalidMeasure";
    case ErrorKind::InvalidHistory: return "InvalidHistory";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::MassAtZero: return "MassAtZero";
    case ErrorKind::NotContractive: return "NotContractive";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IncompatibleInitialData: return "IncompatibleInitialData";
    case ErrorKind::ValidationFailure: return "ValidationFailure";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::OrderViolation: return "OrderViolation";
    case ErrorKind::NoPath: return "NoPath";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

}  // namespace nfde
