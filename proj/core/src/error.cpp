#include "cola/error.hpp"

namespace cola {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kShape: return "shape_error";
    case ErrorKind::kState: return "state_error";
    case ErrorKind::kEmptyBatch: return "empty_batch_error";
    case ErrorKind::kIndex: return "index_error";
    case ErrorKind::kRange: return "range_error";
    case ErrorKind::kParameter: return "parameter_error";
    case ErrorKind::kEmptyInput: return "empty_input_error";
    case ErrorKind::kFormat: return "format_error";
    case ErrorKind::kGeneration: return "generation_error";
    case ErrorKind::kAdaptationImpossible: return "adaptation_impossible";
    case ErrorKind::kDivergence: return "divergence_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kIo: return "io_error";
  }
  return "unknown_error";
}

}  // namespace cola
