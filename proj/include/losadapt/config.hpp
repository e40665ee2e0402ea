// Copyright 2026 The losadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON mappings for the declarative configuration types. Missing keys keep
// their defaults, so partial documents are valid.

#ifndef LOSADAPT_CONFIG_HPP_
#define LOSADAPT_CONFIG_HPP_

#include "json.hpp"
#include "losadapt/grid.hpp"
#include "losadapt/los_supervision.hpp"
#include "losadapt/scheduler.hpp"

namespace losadapt {

using Json = nlohmann::json;

Json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const Json& j, GridSpec defaults = {});

/// Stored as the sorted list of static class ids plus the channel count.
Json to_json(const StaticClassMask& mask);
StaticClassMask static_mask_from_json(const Json& j);

Json to_json(const SchedulerConfig& cfg);
SchedulerConfig scheduler_config_from_json(const Json& j, SchedulerConfig defaults = {});

}  // namespace losadapt

#endif  // LOSADAPT_CONFIG_HPP_
