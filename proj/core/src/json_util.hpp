// json_util.hpp - private helpers around nlohmann/json.

#pragma once

#include <string>

#include "json.hpp"

namespace mvlab::detail {

using json = nlohmann::json;

enum class RealFormat {
  Fixed6,     // "%.6f", used by the canonical annotation format
  RoundTrip,  // shortest representation that parses back to the same double
};

/// Deterministic dump: object keys sorted, two-space indentation when
/// `indent` is true, trailing newline.
std::string canonical_dump(const json& value, RealFormat reals, bool indent = true);

}  // namespace mvlab::detail
