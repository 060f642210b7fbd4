#include "adhoc/core/error.hpp"

namespace adhoc {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::not_found:
    case ErrorKind::config:
    case ErrorKind::degenerate:
      return 1;
    case ErrorKind::missing_input:
      return 2;
    case ErrorKind::internal:
      return 3;
  }
  return 3;
}

}  // namespace adhoc
