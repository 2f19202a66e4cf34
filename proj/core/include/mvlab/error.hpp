// error.hpp - error codes shared by every mvlab module.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvlab {

enum class ErrorCode {
  Empty,               // E_EMPTY
  Malformed,           // E_MALFORMED
  BadType,             // E_BAD_TYPE
  BadGeometry,         // E_BAD_GEOMETRY
  EmptyDisplay,        // E_EMPTY_DISPLAY
  AllClipped,          // E_ALL_CLIPPED
  Unresolvable,        // E_UNRESOLVABLE
  NotRefined,          // E_NOT_REFINED
  EmptyCorpus,         // E_EMPTY_CORPUS
  Degenerate,          // E_DEGENERATE
  Insufficient,        // E_INSUFFICIENT
  EmptySketch,         // E_EMPTY_SKETCH
  MissingType,         // E_MISSING_TYPE
  TooFew,              // E_TOO_FEW
  TemplateTooSmall,    // E_TEMPLATE_TOO_SMALL
  NoFiles,             // E_NO_FILES
  Io,                  // E_IO
  InvalidArgument,     // E_INVALID_ARGUMENT
};

/// Machine-readable name, e.g. "E_MALFORMED".
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mvlab
