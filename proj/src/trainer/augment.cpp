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

#include "trainer/augment.hpp"

#include <algorithm>
#include <random>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::trainer {

namespace {

bool is_flat(const AlphaMatte& a) {
    const auto& v = a.values();
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }) ||
           std::all_of(v.begin(), v.end(), [](double x) { return x == 1.0; });
}

// Draws from the raw engine so results do not depend on the standard
// library's distribution implementations.
int uniform_index(std::mt19937_64& rng, int n) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

AugmentedSample augment(const ImageRGB& image, const AlphaMatte& alpha, const AugmentOptions& options,
                        std::uint64_t seed) {
    require_same_dims(image, alpha, "augment");
    if (options.crop_sizes.empty()) throw ConfigError("augment: no crop sizes");
    if (options.target_size <= 0) throw ConfigError(fmt::format("augment: bad target size {}", options.target_size));

    std::mt19937_64 rng(seed);
    AugmentedSample out;
    out.crop_size = options.crop_sizes[uniform_index(rng, static_cast<int>(options.crop_sizes.size()))];
    const ImageRGB padded_image = pad_reflect(image, out.crop_size, out.crop_size);
    const AlphaMatte padded_alpha = pad_reflect(alpha, out.crop_size, out.crop_size);

    const int span_y = padded_alpha.height() - out.crop_size + 1;
    const int span_x = padded_alpha.width() - out.crop_size + 1;
    AlphaMatte alpha_crop;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        out.y0 = uniform_index(rng, span_y);
        out.x0 = uniform_index(rng, span_x);
        alpha_crop = crop(padded_alpha, out.y0, out.x0, out.crop_size, out.crop_size);
        if (!is_flat(alpha_crop)) break;
    }
    ImageRGB image_crop = crop(padded_image, out.y0, out.x0, out.crop_size, out.crop_size);

    out.image = resize_bicubic(image_crop, options.target_size, options.target_size);
    out.alpha = resize_bilinear(alpha_crop, options.target_size, options.target_size);
    out.flipped = uniform_unit(rng) < options.flip_prob;
    if (out.flipped) {
        out.image = flip_horizontal(out.image);
        out.alpha = flip_horizontal(out.alpha);
    }
    return out;
}

}  // namespace msia::trainer
