#pragma once

#include "tvfp/problems/gradient.hpp"
#include "tvfp/problems/loadflow.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace tvfp {

using Json = nlohmann::json;

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// A scalar signal: a number (constant), an array (one value per tick, the
/// last held), or {"kind": "sinusoid", "offset", "amplitude", "period",
/// "phase"} / {"kind": "ramp", "start", "slope"}. `rate` scales the speed of
/// sinusoids and ramps.
ScalarSeries series_from_json(const Json& j, const std::string& where, double rate = 1.0);

/// {"a": [...], "c": [...], "lo": [...], "hi": [...], "gamma", "eta", "w", "r"}.
TimeVaryingQP qp_from_json(const Json& j, double rate = 1.0);

/// "synthetic" or {"buses", "slack_voltage": [re, im], "lines": [{"from",
/// "to", "z": [re, im]}], "areas": [...], "ball_radius"}.
PowerNetwork network_from_json(const Json& j);

/// {"kind": "constant" | "random_walk" | "sinusoid" | "series", ...}. The
/// base injections come from "base" ([[re, im], ...]) or, for the synthetic
/// network, synthetic_base_loads().
LoadProfile loads_from_json(const Json& j, const PowerNetwork& net, bool synthetic, int horizon,
                            std::uint64_t seed, double rate = 1.0);

}  // namespace tvfp
