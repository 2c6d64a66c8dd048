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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"
#include "core/manifest.hpp"

namespace msia::metrics {

/// SAD, Gradient and Connectivity sums are divided by this constant.
inline constexpr double kSumScale = 1000.0;
inline constexpr double kGradientSigma = 1.4;
inline constexpr double kConnectivityTheta = 0.15;
inline constexpr double kConnectivityStep = 0.1;

double sad(const AlphaMatte& pred, const AlphaMatte& gt);
double mse(const AlphaMatte& pred, const AlphaMatte& gt);

/// First-order Gaussian derivative filter pair. `along_x` is the 2-D kernel
/// hx(i, j) = gauss[i] * dgauss[j] (already L2-normalised); hy is its transpose.
struct GaussianDerivative {
    int half = 0;
    std::vector<double> gauss;   // row profile, unit L2 norm
    std::vector<double> dgauss;  // column profile, unit L2 norm
};

GaussianDerivative gaussian_derivative(double sigma = kGradientSigma);

/// Σ (|∇pred| − |∇gt|)² / 1000, derivatives taken by convolution with the
/// Gaussian-derivative pair under replicate borders.
double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt, double sigma = kGradientSigma);

/// Thresholded largest-component connectivity error (4-connectivity).
double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, double step = kConnectivityStep,
                          double theta = kConnectivityTheta);

struct ImageMetrics {
    std::string id;
    double sad = 0.0;
    double mse = 0.0;
    double gradient = 0.0;
    double connectivity = 0.0;
};

ImageMetrics compute_metrics(const AlphaMatte& pred, const AlphaMatte& gt, std::string id = {});

struct MetricsReport {
    std::string label;
    std::optional<std::string> variant;
    std::vector<ImageMetrics> images;
    std::vector<std::string> missing;
    ImageMetrics means;  // id is empty

    void recompute_means();
};

struct EvaluateOptions {
    /// Without this flag a missing prediction is an error.
    bool allow_missing = false;
    std::string label;
};

/// Prediction for record r is expected at predictions_dir / "<stem of r.composite>.png".
MetricsReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& predictions_dir,
                       const EvaluateOptions& options = {});

using Predictor = std::function<AlphaMatte(const ManifestRecord&, const ImageRGB&)>;

/// Runs `predict` on every composite and scores it against the ground truth.
MetricsReport evaluate_with(const DatasetManifest& manifest, const Predictor& predict,
                            const EvaluateOptions& options = {});

std::string record_id(const ManifestRecord& record);

}  // namespace msia::metrics
