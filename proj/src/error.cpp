#include "trapdoor/error.hpp"

namespace trapdoor {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::UndefinedCell: return "undefined-cell";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace trapdoor
