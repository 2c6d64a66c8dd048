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

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "metrics/metrics.hpp"
#include "model/matting_net.hpp"
#include "trainer/config.hpp"
#include "trainer/trainer.hpp"

namespace msia::trainer {

struct AblationRow {
    model::AblationVariant variant;
    std::size_t parameter_count = 0;
    metrics::MetricsReport report;
    std::filesystem::path checkpoint;
    std::filesystem::path report_path;
};

struct AblationResult {
    std::vector<AblationRow> rows;  // baseline, inist, inist_sedst, full
    std::string table;
    std::filesystem::path table_path;    // <output_dir>/ablation_table.txt
    std::filesystem::path summary_path;  // <output_dir>/ablation.json
};

/// Learnable parameter count of each variant under cfg.model.profile.
std::vector<std::pair<model::AblationVariant, std::size_t>> variant_parameter_counts(const TrainingConfig& cfg);

/// Trains every variant with identical seeds and data (outputs under
/// <output_dir>/<variant>/), evaluates each on test_manifest (train_manifest
/// when unset) and writes the comparison table.
AblationResult ablation_suite(const TrainingConfig& cfg, const TrainHooks& hooks = {});

}  // namespace msia::trainer
