#include "mvlab/error.hpp"

namespace mvlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Empty: return "E_EMPTY";
    case ErrorCode::Malformed: return "E_MALFORMED";
    case ErrorCode::BadType: return "E_BAD_TYPE";
    case ErrorCode::BadGeometry: return "E_BAD_GEOMETRY";
    case ErrorCode::EmptyDisplay: return "E_EMPTY_DISPLAY";
    case ErrorCode::AllClipped: return "E_ALL_CLIPPED";
    case ErrorCode::Unresolvable: return "E_UNRESOLVABLE";
    case ErrorCode::NotRefined: return "E_NOT_REFINED";
    case ErrorCode::EmptyCorpus: return "E_EMPTY_CORPUS";
    case ErrorCode::Degenerate: return "E_DEGENERATE";
    case ErrorCode::Insufficient: return "E_INSUFFICIENT";
    case ErrorCode::EmptySketch: return "E_EMPTY_SKETCH";
    case ErrorCode::MissingType: return "E_MISSING_TYPE";
    case ErrorCode::TooFew: return "E_TOO_FEW";
    case ErrorCode::TemplateTooSmall: return "E_TEMPLATE_TOO_SMALL";
    case ErrorCode::NoFiles: return "E_NO_FILES";
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
  }
  return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace mvlab
