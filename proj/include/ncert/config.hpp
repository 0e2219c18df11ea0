#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "ncert/certify.hpp"
#include "ncert/system.hpp"

namespace ncert {

struct SimulationSettings {
    double step = 1e-3;
    double t_end = 10.0;
};

struct RunConfig {
    NeutralSystem system;
    std::optional<InitialData> initial;
    CertifyOptions certify;  // norm, sampling, declared bounds, flags
    std::optional<SimulationSettings> simulation;
    int substitution_count = 0;  // total parameter replacements performed
};

struct LoadOptions {
    // Named scalar values substituted into every expression string before
    // parsing; overrides any defaults in the config's "parameters" object.
    std::map<std::string, double> parameter_overrides;
    // Fallback sampling density when the config does not set one (the CLI
    // wires NCERT_SAMPLES through here).
    std::optional<int> default_samples;
};

RunConfig config_from_json(const nlohmann::ordered_json& doc, const LoadOptions& opts = {});
RunConfig load_config(const std::string& path, const LoadOptions& opts = {});
nlohmann::ordered_json read_config_json(const std::string& path);

}  // namespace ncert
