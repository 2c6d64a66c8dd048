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
#include <vector>

#include "core/image.hpp"

namespace msia::trainer {

struct AugmentOptions {
    std::vector<int> crop_sizes{128, 160, 200};
    int target_size = 128;
    double flip_prob = 0.5;
    /// Redraws of the crop position while its alpha is all 0 or all 1.
    int max_retries = 10;
};

struct AugmentedSample {
    ImageRGB image;
    AlphaMatte alpha;
    int crop_size = 0;
    int y0 = 0;
    int x0 = 0;
    bool flipped = false;
};

/// Random square crop (size drawn uniformly from crop_sizes) → resize to
/// target_size (bicubic image, bilinear alpha, both clamped) → horizontal
/// flip with probability flip_prob. Inputs smaller than the crop are
/// mirror-padded first. Deterministic in `seed`.
AugmentedSample augment(const ImageRGB& image, const AlphaMatte& alpha, const AugmentOptions& options,
                        std::uint64_t seed);

}  // namespace msia::trainer
