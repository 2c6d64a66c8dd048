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

#include <vector>

#include "core/image.hpp"

namespace msia::losses {

struct LossWeights {
    double lambda1 = 1.0;
    double lambda2 = 0.1;

    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double dynamic_range = 1.0;
    /// Single window spanning the whole image (the literal global-statistics
    /// form) instead of the sliding Gaussian window.
    bool global_statistics = false;

    double c1() const { return (0.01 * dynamic_range) * (0.01 * dynamic_range); }
    double c2() const { return (0.03 * dynamic_range) * (0.03 * dynamic_range); }
    /// Normalised 1-D Gaussian; the 2-D window is its outer product.
    std::vector<double> window_1d() const;
};

struct L1Loss {
    double sum = 0.0;
    double mean = 0.0;
};

L1Loss l1_loss(const AlphaMatte& pred, const AlphaMatte& gt);

/// 1 − mean SSIM over all valid window positions. Range [0, 2].
double ssim_loss(const AlphaMatte& pred, const AlphaMatte& gt, const SsimParams& params = {});

/// λ1 · mean L1 + λ2 · SSIM loss.
double total_loss(const AlphaMatte& pred, const AlphaMatte& gt, const LossWeights& weights,
                  const SsimParams& params = {});

/// (1, 0.1) for the first epoch, (1, 0.025) afterwards. Epochs are 1-based.
LossWeights lambda_schedule(int epoch);

/// d(mean L1)/d pred, using sign(0) = 0 at the kinks.
AlphaMatte l1_mean_gradient(const AlphaMatte& pred, const AlphaMatte& gt);
AlphaMatte ssim_loss_gradient(const AlphaMatte& pred, const AlphaMatte& gt, const SsimParams& params = {});

struct LossEvaluation {
    double l1 = 0.0;    // mean-reduced
    double ssim = 0.0;
    double total = 0.0;
    AlphaMatte gradient;  // d total / d pred
};

LossEvaluation evaluate_total_loss(const AlphaMatte& pred, const AlphaMatte& gt, const LossWeights& weights,
                                   const SsimParams& params = {});

}  // namespace msia::losses
