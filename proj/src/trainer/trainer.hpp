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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/manifest.hpp"
#include "metrics/metrics.hpp"
#include "model/matting_net.hpp"
#include "trainer/config.hpp"

namespace msia::trainer {

struct TrainLogRow {
    std::int64_t iter = 0;  // 0-based; lr = poly_lr(iter, total)
    int epoch = 0;          // 1-based
    double lr = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double l1 = 0.0;    // batch mean of the mean-reduced L1 term
    double ssim = 0.0;  // batch mean of the SSIM loss term
    double total = 0.0;
};

struct EvalLogRow {
    int epoch = 0;
    metrics::ImageMetrics means;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    std::vector<EvalLogRow> evals;

    /// Columns: iter,epoch,lr,lambda1,lambda2,l1,ssim,total (17 significant digits).
    std::string csv() const;
    /// Columns: epoch,sad,mse,gradient,connectivity.
    std::string eval_csv() const;
};

struct Sample {
    std::string id;
    ImageRGB image;
    AlphaMatte alpha;
};

std::vector<Sample> load_samples(const DatasetManifest& manifest);

struct TrainHooks {
    std::function<void(const TrainLogRow&)> on_iteration;
    std::function<void(const EvalLogRow&)> on_eval;
};

struct TrainResult {
    std::unique_ptr<model::MattingNet> net;
    TrainLog log;
    std::filesystem::path output_dir;
    std::filesystem::path final_checkpoint;  // <output_dir>/last.ckpt
    std::filesystem::path log_path;          // <output_dir>/train_log.csv
    std::filesystem::path eval_log_path;     // <output_dir>/eval_log.csv
    std::vector<std::filesystem::path> checkpoints;
    std::optional<std::filesystem::path> best_checkpoint;
};

std::int64_t iterations_per_epoch(std::size_t samples, int batch_size);

/// Network initialised from cfg.model and cfg.seed.
std::unique_ptr<model::MattingNet> build_model(const TrainingConfig& cfg);

/// Runs cfg.epochs epochs of momentum SGD on the blended loss. Writes
/// config.txt, train_log.csv, eval_log.csv, per-epoch checkpoints and
/// last.ckpt under the resolved output directory. A non-finite loss writes
/// nan_dump.json and throws TrainingError.
TrainResult train(const TrainingConfig& cfg, const TrainHooks& hooks = {});

struct EvalOptions {
    std::string label;
    /// When set, each prediction is also written there as <id>.png.
    std::optional<std::filesystem::path> predictions_dir;
};

/// Full-resolution inference on every record followed by metric scoring.
metrics::MetricsReport evaluate_model(model::MattingNet& net, const DatasetManifest& manifest,
                                      const EvalOptions& options = {});
metrics::MetricsReport evaluate_model(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                                      const EvalOptions& options = {});

struct PredictOptions {
    /// If set, the checkpoint must hold this variant.
    std::optional<model::AblationVariant> expected_variant;
    /// Side-by-side image | alpha | composite-over-green preview.
    std::optional<std::filesystem::path> preview_path;
};

/// Writes the 8-bit alpha for `image_path` at its own resolution.
AlphaMatte predict_file(const std::filesystem::path& checkpoint, const std::filesystem::path& image_path,
                        const std::filesystem::path& output_path, const PredictOptions& options = {});

}  // namespace msia::trainer
