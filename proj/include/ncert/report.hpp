#pragma once

#include <json.hpp>

#include "ncert/certify.hpp"
#include "ncert/simulate.hpp"
#include "ncert/system.hpp"

namespace ncert {

// JSON views of the result types. Reports are deterministic: no timestamps,
// ordered keys, and every number carries a provenance field.
nlohmann::ordered_json to_json(const Provenance& p);
nlohmann::ordered_json to_json(const Certificate& cert);
nlohmann::ordered_json to_json(const ValidationReport& report);
nlohmann::ordered_json to_json(const ExponentialBound& bound);
nlohmann::ordered_json to_json(const BoundCheck& check, int max_curve_points = 1001);

}  // namespace ncert
