#pragma once

// Run configuration: one JSON section per CLI subcommand. Every key has a
// default; unknown keys and mistyped values are rejected, and the resolved
// section (defaults filled in) is what a run echoes next to its outputs.
//
//   {
//     "schema_version": "1",
//     "scan-model": { "model": "shear", "control": "noise_u", "grid": [...] }
//   }

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "evtip/error.hpp"
#include "evtip/extremes.hpp"
#include "evtip/sde_models.hpp"

namespace evtip {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline json default_config_section(const std::string& command) {
  const json model = {{"model", "shear"},
                      {"mu", 1.0},
                      {"nu", 0.2475},
                      {"noise_u", 0.0},
                      {"laminar_threshold", kDefaultLaminarThreshold},
                      {"a", 1.0},
                      {"lambda", 0.0},
                      {"epsilon", 0.3},
                      {"dt", 0.01}};
  if (command == "fit")
    return {{"input", ""},
            {"value_column", -1},
            {"pre_blocked", false},
            {"tail", "maxima"},
            {"bin_length_m", 1000},
            {"burn_in_fraction", kDefaultBurnIn},
            {"sensitivity_grid", json::array()},
            {"output_dir", "evtip-out"}};
  if (command == "scan-model") {
    json s = model;
    s.update({{"control", "noise_u"},
              {"grid", json::array()},
              {"n_realizations", 10},
              {"bin_length_m", 10000},
              {"n_bins", 100},
              {"burn_in_fraction", kDefaultBurnIn},
              {"master_seed", 1},
              {"common_random_numbers", true},
              {"reset_on_escape", false},
              {"output_dir", "evtip-out"}});
    return s;
  }
  if (command == "scan-data")
    return {{"inputs", json::array()},
            {"value_column", -1},
            {"bin_length_m", 1000},
            {"burn_in_fraction", kDefaultBurnIn},
            {"pooled", false},
            {"output_dir", "evtip-out"}};
  if (command == "rescale")
    return {{"a", 1.0},
            {"lambda_grid", json::array()},
            {"pairs", json::array()},
            {"n_realizations", 10},
            {"n_bins", 1000},
            {"dt", 0.01},
            {"burn_in_fraction", kDefaultBurnIn},
            {"master_seed", 1},
            {"reset_on_escape", true},
            {"output_dir", "evtip-out"}};
  if (command == "simulate") {
    json s = model;
    s.update({{"n_steps", 100000},
              {"seed", 1},
              {"record_escapes", false},
              {"output_dir", "evtip-out"}});
    return s;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown command '" + command + "'");
}

inline const std::vector<std::string>& config_commands() {
  static const std::vector<std::string> names{"fit", "scan-model", "scan-data", "rescale",
                                              "simulate"};
  return names;
}

namespace detail {

inline bool same_kind(const json& expected, const json& given) {
  if (expected.is_boolean()) return given.is_boolean();
  if (expected.is_number_integer()) return given.is_number_integer();
  if (expected.is_number()) return given.is_number();
  if (expected.is_string()) return given.is_string();
  if (expected.is_array()) return given.is_array();
  return given.type() == expected.type();
}

inline const char* kind_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

}  // namespace detail

/// Sets one key of a resolved section after checking it exists and that the
/// value has the default's type.
inline void set_config_value(json& section, const std::string& command, const std::string& key,
                             const json& value) {
  const json defaults = default_config_section(command);
  if (!defaults.contains(key))
    throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in section '" + command + "'");
  if (!detail::same_kind(defaults[key], value))
    throw Error(ErrorCode::InvalidConfig, "key '" + command + "." + key + "' expects " +
                                              detail::kind_name(defaults[key]) + ", got " +
                                              value.dump());
  section[key] = value;
}

/// Defaults for `command` overlaid with the matching section of `file`
/// (which may be null). Other known sections in the file are ignored.
inline json resolve_config_section(const json& file, const std::string& command) {
  json section = default_config_section(command);
  if (file.is_null()) return section;
  if (!file.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : file.items()) {
    if (key == "schema_version") {
      if (value != kSchemaVersion)
        throw Error(ErrorCode::InvalidConfig, "unsupported schema_version " + value.dump());
      continue;
    }
    bool known = false;
    for (const auto& c : config_commands()) known = known || c == key;
    if (!known) throw Error(ErrorCode::InvalidConfig, "unknown config section '" + key + "'");
  }
  if (file.contains(command)) {
    const json& given = file[command];
    if (!given.is_object())
      throw Error(ErrorCode::InvalidConfig, "section '" + command + "' must be an object");
    for (const auto& [key, value] : given.items()) set_config_value(section, command, key, value);
  }
  return section;
}

inline json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

/// The document written next to a run's outputs.
inline json echo_config(const std::string& command, const json& section) {
  return {{"schema_version", kSchemaVersion}, {command, section}};
}

}  // namespace evtip
