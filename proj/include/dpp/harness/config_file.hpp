#pragma once

#include <string>

#include "dpp/train/config.hpp"

namespace dpp {

// INI file with [train], [model], [noise] and [data] sections; keys are the
// ones listed by config_entries (e.g. "K" under [model]). Missing keys keep
// their defaults, so an empty file yields the default configuration. An empty
// path also yields the defaults. Unknown sections or keys, unparsable values
// and out-of-range values raise ConfigError naming the key path.
TrainConfig load_config(const std::string& path);
TrainConfig parse_config_text(const std::string& text);

// Assigns one "section.key" value; throws ConfigError naming the key.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

// INI rendering of config_entries; parse_config_text(render_config(c)) == c.
std::string render_config(const TrainConfig& cfg);

}  // namespace dpp
