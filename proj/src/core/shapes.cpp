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

#include "core/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <fmt/core.h>

#include "core/compositor.hpp"
#include "core/errors.hpp"

namespace msia {

namespace fs = std::filesystem;

namespace {

double coverage(double signed_distance, double softness) {
    return std::clamp(0.5 - signed_distance / softness, 0.0, 1.0);
}

struct Strand {
    double x0, y0, angle, length, amplitude, frequency, half_width, opacity;
};

double distance_to_strand(const Strand& s, double px, double py) {
    constexpr int kSegments = 48;
    double best = 1e30;
    double prev_x = s.x0, prev_y = s.y0;
    const double ca = std::cos(s.angle), sa = std::sin(s.angle);
    for (int i = 1; i <= kSegments; ++i) {
        const double t = s.length * i / kSegments;
        const double wave = s.amplitude * std::sin(s.frequency * t);
        const double x = s.x0 + ca * t - sa * wave;
        const double y = s.y0 + sa * t + ca * wave;
        const double dx = x - prev_x, dy = y - prev_y;
        const double len2 = dx * dx + dy * dy;
        double u = len2 > 0 ? ((px - prev_x) * dx + (py - prev_y) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double ex = prev_x + u * dx - px, ey = prev_y + u * dy - py;
        best = std::min(best, std::sqrt(ex * ex + ey * ey));
        prev_x = x;
        prev_y = y;
    }
    return best;
}

}  // namespace

AlphaMatte render_shape_alpha(int height, int width, ShapeKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double scale = std::min(height, width);
    const double cx = width * (0.4 + 0.2 * u(rng));
    const double cy = height * (0.4 + 0.2 * u(rng));
    const double radius = scale * (0.18 + 0.12 * u(rng));
    const double softness = 1.5 + 3.0 * u(rng);
    const double thickness = scale * (0.06 + 0.06 * u(rng));

    std::vector<Strand> strands;
    if (kind == ShapeKind::strands) {
        const int n = 6 + static_cast<int>(u(rng) * 6);
        for (int i = 0; i < n; ++i) {
            const double a = 2.0 * std::numbers::pi * u(rng);
            const double body = radius * 0.6;
            strands.push_back({cx + std::cos(a) * body, cy + std::sin(a) * body, a, scale * (0.2 + 0.2 * u(rng)),
                               scale * 0.02 * (1.0 + 2.0 * u(rng)), 0.05 + 0.15 * u(rng), 0.6 + 0.8 * u(rng),
                               0.35 + 0.5 * u(rng)});
        }
    }

    AlphaMatte alpha(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double r = std::hypot(px - cx, py - cy);
            double a = 0.0;
            switch (kind) {
                case ShapeKind::disc:
                    a = coverage(r - radius, softness);
                    break;
                case ShapeKind::ring:
                    a = coverage(std::abs(r - radius) - thickness, softness);
                    break;
                case ShapeKind::strands: {
                    a = coverage(r - radius * 0.6, softness);
                    for (const auto& s : strands)
                        a = std::max(a, s.opacity * coverage(distance_to_strand(s, px, py) - s.half_width, 1.0));
                    break;
                }
            }
            alpha.at(y, x) = a;
        }
    }
    return alpha;
}

ImageRGB render_texture(int height, int width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = u(rng);
        c1[c] = u(rng);
    }
    const double angle = 2.0 * std::numbers::pi * u(rng);
    const double fx = 2.0 * std::numbers::pi * (1.0 + 5.0 * u(rng)) / width;
    const double fy = 2.0 * std::numbers::pi * (1.0 + 5.0 * u(rng)) / height;
    const double amp = 0.05 + 0.15 * u(rng);
    const double phase = 2.0 * std::numbers::pi * u(rng);

    ImageRGB image(height, width);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double diag = std::hypot(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double t = std::clamp(0.5 + ((x - width / 2.0) * ca + (y - height / 2.0) * sa) / diag, 0.0, 1.0);
            const double wave = amp * std::sin(fx * x + phase) * std::cos(fy * y);
            for (int c = 0; c < 3; ++c) {
                const double v = (1.0 - t) * c0[c] + t * c1[c] + wave * (c == 1 ? -1.0 : 1.0);
                image.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return image;
}

ShapeAssetDirs generate_shape_assets(const fs::path& root, const ShapeAssetOptions& options) {
    if (options.fg_count < 1 || options.bg_count < 1)
        throw ConfigError("shape asset counts must be positive");
    if (options.size < 8) throw ConfigError(fmt::format("shape asset size {} is too small", options.size));
    ShapeAssetDirs dirs{root / "fg", root / "alpha", root / "bg"};
    for (const auto& d : {dirs.fg_dir, dirs.alpha_dir, dirs.bg_dir}) fs::create_directories(d);

    constexpr ShapeKind kKinds[] = {ShapeKind::disc, ShapeKind::ring, ShapeKind::strands};
    for (int i = 0; i < options.fg_count; ++i) {
        const std::uint64_t s = mix_seed(options.seed, static_cast<std::uint64_t>(i));
        const std::string name = fmt::format("shape_{:04d}.png", i);
        save_alpha(dirs.alpha_dir / name, render_shape_alpha(options.size, options.size, kKinds[i % 3], s));
        save_image_rgb(dirs.fg_dir / name, render_texture(options.size, options.size, mix_seed(s, 1)));
    }
    for (int i = 0; i < options.bg_count; ++i) {
        const std::uint64_t s = mix_seed(options.seed ^ 0xB6B6B6B6ull, static_cast<std::uint64_t>(i));
        save_image_rgb(dirs.bg_dir / fmt::format("bg_{:04d}.png", i), render_texture(options.size, options.size, s));
    }
    return dirs;
}

}  // namespace msia
