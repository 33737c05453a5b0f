#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace smelab {

using Json = nlohmann::json;

// Parses a flat key = value config (with optional [section] groups, '#'
// comments, and bool/number coercion) into a JSON object. Text whose first
// non-space character is '{' is parsed as JSON directly.
Json parse_config_text(const std::string& text);

// Loads a config file in either format. A run manifest (an object carrying
// a "config" key next to "artifacts") is unwrapped to its config so a
// manifest can be re-run directly.
Json load_config_file(const std::string& path);

// Manifest of one command invocation: the resolved config, the artifact
// file names it produced, the wall time, and the library version.
Json make_manifest(const Json& config, const std::vector<std::string>& artifacts,
                   double wall_time_s);

}  // namespace smelab
