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
#include <utility>
#include <vector>

namespace msia {

/// H×W×3 raster, channels interleaved (RGB), values in [0,1].
class ImageRGB {
public:
    ImageRGB() = default;
    ImageRGB(int height, int width, float fill = 0.0f);

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return pixels_.empty(); }

    float& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
    float at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

    std::vector<float>& pixels() { return pixels_; }
    const std::vector<float>& pixels() const { return pixels_; }

    /// Throws ShapeError if any channel value lies outside [0,1] or is not finite.
    void validate() const;

    friend bool operator==(const ImageRGB&, const ImageRGB&) = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<float> pixels_;
};

/// H×W opacity map in [0,1]. Held in double so loss gradients can be
/// checked against finite differences at double precision.
class AlphaMatte {
public:
    AlphaMatte() = default;
    AlphaMatte(int height, int width, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    void validate() const;

    friend bool operator==(const AlphaMatte&, const AlphaMatte&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

void require_same_dims(const ImageRGB& a, const ImageRGB& b, const char* what);
void require_same_dims(const ImageRGB& image, const AlphaMatte& alpha, const char* what);
void require_same_dims(const AlphaMatte& a, const AlphaMatte& b, const char* what);

/// Round-half-up quantisation of a [0,1] value to 8 bits (values are clamped).
std::uint8_t quantize_unit(double v);

ImageRGB load_image_rgb(const std::filesystem::path& path);
/// 8-bit gray (or the first channel of a color file); value v maps to v/255.
AlphaMatte load_alpha(const std::filesystem::path& path);
std::pair<ImageRGB, AlphaMatte> load_pair(const std::filesystem::path& image_path,
                                          const std::filesystem::path& alpha_path);

void save_image_rgb(const std::filesystem::path& path, const ImageRGB& image);
void save_alpha(const std::filesystem::path& path, const AlphaMatte& alpha);

// Geometry helpers shared by the compositor and the augmentation pipeline.
ImageRGB resize_bicubic(const ImageRGB& image, int height, int width);
ImageRGB resize_bilinear(const ImageRGB& image, int height, int width);
AlphaMatte resize_bilinear(const AlphaMatte& alpha, int height, int width);
ImageRGB crop(const ImageRGB& image, int y0, int x0, int height, int width);
AlphaMatte crop(const AlphaMatte& alpha, int y0, int x0, int height, int width);
ImageRGB flip_horizontal(const ImageRGB& image);
AlphaMatte flip_horizontal(const AlphaMatte& alpha);
/// Mirror padding (edge pixel not repeated) so that the result is at least
/// min_height × min_width. The original occupies the top-left corner.
ImageRGB pad_reflect(const ImageRGB& image, int min_height, int min_width);
AlphaMatte pad_reflect(const AlphaMatte& alpha, int min_height, int min_width);

}  // namespace msia
