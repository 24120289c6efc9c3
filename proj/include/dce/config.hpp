// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "dce/bench.hpp"
#include <json.hpp>

namespace dce {

/// Parses the JSON experiment schema. Unknown keys, missing required keys,
/// wrong types and out-of-range values raise ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Fully resolved form (all defaults filled); parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

/// Built-in experiment presets: fig1, fig4, fig5, fig6, fig7a, fig7b, iid_control.
std::vector<std::string> preset_names();
/// Throws ConfigError("preset", ...) for an unknown name.
nlohmann::json preset_json(const std::string& name);

}  // namespace dce
