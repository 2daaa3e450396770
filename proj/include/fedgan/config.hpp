#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fedgan/federation.hpp"

namespace fedgan {

/// Validates the whole document and collects every violation (unknown keys,
/// type errors, range errors) instead of stopping at the first. When `out`
/// is non-null and there are no issues, the resolved config is stored there.
std::vector<std::string> check_config(const nlohmann::json& doc, FederationConfig* out);

/// Parse-or-throw wrapper; the ConfigError message lists all violations,
/// one per line.
FederationConfig parse_config(const nlohmann::json& doc);
FederationConfig load_config_file(const std::string& path);

/// Full resolved config (defaults filled in), suitable for echoing back and
/// for the run manifest.
nlohmann::ordered_json config_to_json(const FederationConfig& cfg);

}  // namespace fedgan
