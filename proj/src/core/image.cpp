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

#include "core/image.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/errors.hpp"

namespace msia {

namespace {

cv::Mat to_mat(const ImageRGB& image) {
    cv::Mat m(image.height(), image.width(), CV_32FC3);
    std::copy(image.pixels().begin(), image.pixels().end(), m.ptr<float>());
    return m;
}

ImageRGB from_mat(const cv::Mat& m) {
    ImageRGB out(m.rows, m.cols);
    cv::Mat cont = m.isContinuous() ? m : m.clone();
    const float* src = cont.ptr<float>();
    std::transform(src, src + out.pixels().size(), out.pixels().begin(),
                   [](float v) { return std::clamp(v, 0.0f, 1.0f); });
    return out;
}

cv::Mat to_mat(const AlphaMatte& alpha) {
    cv::Mat m(alpha.height(), alpha.width(), CV_64FC1);
    std::copy(alpha.values().begin(), alpha.values().end(), m.ptr<double>());
    return m;
}

AlphaMatte from_mat_alpha(const cv::Mat& m) {
    AlphaMatte out(m.rows, m.cols);
    cv::Mat cont = m.isContinuous() ? m : m.clone();
    const double* src = cont.ptr<double>();
    std::transform(src, src + out.values().size(), out.values().begin(),
                   [](double v) { return std::clamp(v, 0.0, 1.0); });
    return out;
}

void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

}  // namespace

ImageRGB::ImageRGB(int height, int width, float fill) : height_(height), width_(width) {
    if (height < 1 || width < 1)
        throw ShapeError(fmt::format("image dimensions must be positive, got {}x{}", height, width));
    pixels_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

void ImageRGB::validate() const {
    for (float v : pixels_)
        if (!(v >= 0.0f && v <= 1.0f)) throw ShapeError(fmt::format("image value {} outside [0,1]", v));
}

AlphaMatte::AlphaMatte(int height, int width, double fill) : height_(height), width_(width) {
    if (height < 1 || width < 1)
        throw ShapeError(fmt::format("matte dimensions must be positive, got {}x{}", height, width));
    values_.assign(static_cast<std::size_t>(height) * width, fill);
}

void AlphaMatte::validate() const {
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0)) throw ShapeError(fmt::format("alpha value {} outside [0,1]", v));
}

void require_same_dims(const ImageRGB& a, const ImageRGB& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeError(fmt::format("{}: {}x{} vs {}x{}", what, a.height(), a.width(), b.height(), b.width()));
}

void require_same_dims(const ImageRGB& image, const AlphaMatte& alpha, const char* what) {
    if (image.height() != alpha.height() || image.width() != alpha.width())
        throw ShapeError(fmt::format("{}: image {}x{} vs alpha {}x{}", what, image.height(), image.width(),
                                     alpha.height(), alpha.width()));
}

void require_same_dims(const AlphaMatte& a, const AlphaMatte& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeError(fmt::format("{}: {}x{} vs {}x{}", what, a.height(), a.width(), b.height(), b.width()));
}

std::uint8_t quantize_unit(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

ImageRGB load_image_rgb(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (raw.empty()) throw IoError(fmt::format("cannot decode image {}", path.string()));
    if (raw.depth() != CV_8U) throw IoError(fmt::format("{}: only 8-bit images are supported", path.string()));
    ImageRGB out(raw.rows, raw.cols);
    for (int y = 0; y < raw.rows; ++y) {
        const auto* row = raw.ptr<cv::Vec3b>(y);
        for (int x = 0; x < raw.cols; ++x) {
            // OpenCV decodes to BGR.
            out.at(y, x, 0) = row[x][2] / 255.0f;
            out.at(y, x, 1) = row[x][1] / 255.0f;
            out.at(y, x, 2) = row[x][0] / 255.0f;
        }
    }
    return out;
}

AlphaMatte load_alpha(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (raw.empty()) throw IoError(fmt::format("cannot decode alpha {}", path.string()));
    if (raw.depth() != CV_8U) throw IoError(fmt::format("{}: only 8-bit alphas are supported", path.string()));
    AlphaMatte out(raw.rows, raw.cols);
    for (int y = 0; y < raw.rows; ++y) {
        const auto* row = raw.ptr<std::uint8_t>(y);
        for (int x = 0; x < raw.cols; ++x) out.at(y, x) = row[x] / 255.0;
    }
    return out;
}

std::pair<ImageRGB, AlphaMatte> load_pair(const std::filesystem::path& image_path,
                                          const std::filesystem::path& alpha_path) {
    ImageRGB image = load_image_rgb(image_path);
    AlphaMatte alpha = load_alpha(alpha_path);
    require_same_dims(image, alpha, "load_pair");
    return {std::move(image), std::move(alpha)};
}

void save_image_rgb(const std::filesystem::path& path, const ImageRGB& image) {
    cv::Mat out(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = out.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x)
            row[x] = cv::Vec3b(quantize_unit(image.at(y, x, 2)), quantize_unit(image.at(y, x, 1)),
                               quantize_unit(image.at(y, x, 0)));
    }
    ensure_parent(path);
    if (!cv::imwrite(path.string(), out)) throw IoError(fmt::format("cannot write image {}", path.string()));
}

void save_alpha(const std::filesystem::path& path, const AlphaMatte& alpha) {
    cv::Mat out(alpha.height(), alpha.width(), CV_8UC1);
    for (int y = 0; y < alpha.height(); ++y) {
        auto* row = out.ptr<std::uint8_t>(y);
        for (int x = 0; x < alpha.width(); ++x) row[x] = quantize_unit(alpha.at(y, x));
    }
    ensure_parent(path);
    if (!cv::imwrite(path.string(), out)) throw IoError(fmt::format("cannot write alpha {}", path.string()));
}

ImageRGB resize_bicubic(const ImageRGB& image, int height, int width) {
    if (image.height() == height && image.width() == width) return image;
    cv::Mat out;
    cv::resize(to_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_CUBIC);
    return from_mat(out);
}

ImageRGB resize_bilinear(const ImageRGB& image, int height, int width) {
    if (image.height() == height && image.width() == width) return image;
    cv::Mat out;
    cv::resize(to_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_mat(out);
}

AlphaMatte resize_bilinear(const AlphaMatte& alpha, int height, int width) {
    if (alpha.height() == height && alpha.width() == width) return alpha;
    cv::Mat out;
    cv::resize(to_mat(alpha), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_mat_alpha(out);
}

ImageRGB crop(const ImageRGB& image, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || y0 + height > image.height() || x0 + width > image.width())
        throw ShapeError(fmt::format("crop {}x{}+{}+{} exceeds image {}x{}", height, width, y0, x0,
                                     image.height(), image.width()));
    ImageRGB out(height, width);
    for (int y = 0; y < height; ++y)
        std::copy_n(&image.pixels()[(static_cast<std::size_t>(y0 + y) * image.width() + x0) * 3],
                    static_cast<std::size_t>(width) * 3,
                    &out.pixels()[static_cast<std::size_t>(y) * width * 3]);
    return out;
}

AlphaMatte crop(const AlphaMatte& alpha, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || y0 + height > alpha.height() || x0 + width > alpha.width())
        throw ShapeError(fmt::format("crop {}x{}+{}+{} exceeds matte {}x{}", height, width, y0, x0,
                                     alpha.height(), alpha.width()));
    AlphaMatte out(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(y, x) = alpha.at(y0 + y, x0 + x);
    return out;
}

ImageRGB flip_horizontal(const ImageRGB& image) {
    ImageRGB out(image.height(), image.width());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width() - 1 - x, c);
    return out;
}

AlphaMatte flip_horizontal(const AlphaMatte& alpha) {
    AlphaMatte out(alpha.height(), alpha.width());
    for (int y = 0; y < alpha.height(); ++y)
        for (int x = 0; x < alpha.width(); ++x) out.at(y, x) = alpha.at(y, alpha.width() - 1 - x);
    return out;
}

ImageRGB pad_reflect(const ImageRGB& image, int min_height, int min_width) {
    const int bottom = std::max(0, min_height - image.height());
    const int right = std::max(0, min_width - image.width());
    if (bottom == 0 && right == 0) return image;
    cv::Mat out;
    cv::copyMakeBorder(to_mat(image), out, 0, bottom, 0, right, cv::BORDER_REFLECT_101);
    return from_mat(out);
}

AlphaMatte pad_reflect(const AlphaMatte& alpha, int min_height, int min_width) {
    const int bottom = std::max(0, min_height - alpha.height());
    const int right = std::max(0, min_width - alpha.width());
    if (bottom == 0 && right == 0) return alpha;
    cv::Mat out;
    cv::copyMakeBorder(to_mat(alpha), out, 0, bottom, 0, right, cv::BORDER_REFLECT_101);
    return from_mat_alpha(out);
}

}  // namespace msia
