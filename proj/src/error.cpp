#include "perfhom/error.hpp"

namespace perfhom {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::UnderResolved: return "under-resolved";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::Breakdown: return "breakdown";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace perfhom
