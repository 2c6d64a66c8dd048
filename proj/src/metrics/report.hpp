// Copyright 2026 The msia-matte Authors
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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics/metrics.hpp"

namespace msia::metrics {

/// Metric definitions and scaling constants stamped into every report.
nlohmann::ordered_json metric_header();

nlohmann::ordered_json to_json(const MetricsReport& report);
/// Throws ConfigError if the header differs from metric_header() or the
/// document does not follow the report schema.
MetricsReport report_from_json(const nlohmann::ordered_json& doc, const std::string& source = "report");

void write_report(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_report(const std::filesystem::path& path);

/// Lists the header keys whose values differ between two documents (dotted paths).
std::vector<std::string> header_differences(const nlohmann::ordered_json& a, const nlohmann::ordered_json& b);

/// Fixed-width table with SAD/MSE/Gradient/Connectivity columns. When every
/// report carries a variant the rows are ordered baseline, +IniST,
/// +IniST+SedST, full and the IniST/SedST/AI component columns are shown.
std::string render_table(const std::vector<MetricsReport>& reports);

/// One bar chart per metric (sad.png, mse.png, gradient.png, connectivity.png).
std::vector<std::filesystem::path> write_bar_plots(const std::filesystem::path& dir,
                                                   const std::vector<MetricsReport>& reports);

}  // namespace msia::metrics
