/*
 * Copyright 2026 The ttkin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// TTD-JSON v1 dataset files and per-node CSV dumps.

#include <string>
#include <vector>

#include "json.hpp"
#include "ttkin/dataset.hpp"

namespace ttkin {

inline constexpr int kTtdVersion = 1;

/// Serializes a dataset. Missing lambda entries become null; any other
/// non-finite value is rejected with kInvalidArgument.
nlohmann::json dataset_to_json(const TravelTimeDataset& ds);

/// Parses a TTD-JSON document. Schema violations and non-finite numbers
/// raise kParse with a JSON path ("$.grid.dt"); a version other than 1
/// raises kVersionMismatch.
TravelTimeDataset dataset_from_json(const nlohmann::json& j);

void dataset_write(const TravelTimeDataset& ds, const std::string& path);
TravelTimeDataset dataset_read(const std::string& path);

/// Writes one CSV row per valid node: parameter coordinates (y1.., t) then
/// `columns.size()` values taken from `values[node * columns.size() + c]`.
void write_node_csv(const std::string& path, const DGrid& grid, const std::vector<std::string>& columns,
                    const std::vector<double>& values);

}  // namespace ttkin
