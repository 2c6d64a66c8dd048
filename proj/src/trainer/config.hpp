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

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "model/matting_net.hpp"

namespace msia::trainer {

/// One flat schema shared by every subcommand. Field names double as the
/// keys of the config file and of command-line overrides.
struct TrainingConfig {
    // Optimisation.
    double lr0 = 0.01;
    double momentum = 0.9;
    double weight_decay = 0.0005;
    double poly_power = 0.9;
    int epochs = 20;
    int batch_size = 4;

    // Augmentation.
    std::vector<int> crop_sizes{128, 160, 200};
    int target_size = 128;
    double flip_prob = 0.5;

    std::uint64_t seed = 0;
    model::ModelConfig model;
    bool ssim_global = false;

    // Data and outputs.
    std::string train_manifest;
    std::string test_manifest;
    std::string output_dir = "runs/default";
    int checkpoint_every = 1;  // epochs; 0 keeps only last.ckpt
    int eval_every = 1;        // epochs; 0 disables per-epoch evaluation

    // Synthesis.
    std::string fg_dir;
    std::string alpha_dir;
    std::string bg_dir;
    std::string data_dir = "data";
    std::string split = "train";
    int per_fg = 1;
    int shape_fg_count = 4;
    int shape_bg_count = 4;
    int shape_size = 128;
};

/// Every key accepted by set_value(), in schema order.
const std::vector<std::string>& config_keys();

/// Throws ConfigError naming the key for unknown keys or unparsable values.
void set_value(TrainingConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const TrainingConfig& cfg, const std::string& key);

/// Parses "key = value" lines; '#' starts a comment. Unknown keys are errors.
TrainingConfig parse_config(const std::string& text, const std::string& source = "config");
TrainingConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" overrides in order; later ones win.
void apply_overrides(TrainingConfig& cfg, const std::vector<std::string>& overrides);

/// Hyperparameters positive, crop sizes ≥ target size, and so on.
void validate(const TrainingConfig& cfg);

/// Round-trippable text form (one "key = value" per line, schema order).
std::string to_text(const TrainingConfig& cfg);
nlohmann::json to_json(const TrainingConfig& cfg);

/// Relative paths are resolved against $MSIA_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_path(const std::string& path);

}  // namespace msia::trainer
