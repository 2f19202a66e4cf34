// design_json.hpp - private JSON mapping of normalized designs.

#pragma once

#include "json_util.hpp"
#include "mvlab/model.hpp"

namespace mvlab::detail {

json metadata_to_json(const Metadata& m);
Metadata metadata_from_json(const json& obj);

/// Geometry in normalized units; small multiples keep their children under
/// "small multiples" like the annotation format.
json design_to_json(const MVDesign& mv);
/// Throws E_MALFORMED, E_BAD_TYPE.
MVDesign design_from_json(const json& obj);

}  // namespace mvlab::detail
