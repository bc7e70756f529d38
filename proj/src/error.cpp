#include "crimetype/error.hpp"

namespace crimetype {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::UnknownLabel: return "unknown_label";
    case ErrorKind::State: return "state";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::DegenerateRow: return "degenerate_row";
    case ErrorKind::Label: return "label";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::UnsupportedModel: return "unsupported_model";
    case ErrorKind::Format: return "format";
  }
  return "unknown";
}

}  // namespace crimetype
