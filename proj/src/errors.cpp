#include "treelab/errors.hpp"

namespace treelab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DenominatorNonpositive: return "DenominatorNonpositive";
    case ErrorKind::FieldRequired: return "FieldRequired";
    case ErrorKind::RadiusTooSmall: return "RadiusTooSmall";
    case ErrorKind::InsufficientPrecision: return "InsufficientPrecision";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace treelab
