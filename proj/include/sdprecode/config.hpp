#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sdprecode/sim.hpp"

namespace sdp {

/// Malformed or inconsistent configuration. The message starts with a location:
/// "line L, column C" for syntax errors or the JSON pointer of the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a SimConfig from JSON. Unknown keys and wrongly typed values are errors;
/// missing keys keep their defaults.
SimConfig config_from_json(const nlohmann::json& j);

/// Inverse of config_from_json; every field is written out.
nlohmann::json config_to_json(const SimConfig& config);

/// Parses JSON text and, unless told otherwise, runs SimConfig::validate.
SimConfig parse_config(const std::string& text, bool validate = true);

SimConfig load_config(const std::string& path, bool validate = true);

}  // namespace sdp
