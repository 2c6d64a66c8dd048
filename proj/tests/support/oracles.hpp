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

// Brute-force reference implementations used only by the tests. They are
// written directly from the metric and loss definitions and share no code
// with the library.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace oracle {

inline msia::AlphaMatte random_matte(std::mt19937_64& rng, int h, int w, bool quantized = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    msia::AlphaMatte m(h, w);
    for (double& v : m.values()) {
        v = u(rng);
        if (quantized) v = std::floor(v * 256.0 > 255.0 ? 255.0 : v * 256.0) / 255.0;
    }
    return m;
}

/// Mattes with large flat 0/1 regions and soft borders, closer to real alphas.
inline msia::AlphaMatte blobby_matte(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cy = u(rng) * h, cx = u(rng) * w, r = (0.2 + 0.4 * u(rng)) * std::min(h, w);
    msia::AlphaMatte m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d = std::hypot(y - cy, x - cx) - r;
            double a = std::clamp(0.5 - d / 2.0, 0.0, 1.0);
            if (u(rng) < 0.1) a = std::clamp(a + (u(rng) - 0.5) * 0.6, 0.0, 1.0);
            m.at(y, x) = a;
        }
    return m;
}

inline msia::ImageRGB random_image(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    msia::ImageRGB img(h, w);
    for (float& v : img.pixels()) v = u(rng);
    return img;
}

inline double sad(const msia::AlphaMatte& p, const msia::AlphaMatte& g) {
    double s = 0.0;
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) s += std::fabs(p.at(y, x) - g.at(y, x));
    return s / 1000.0;
}

inline double mse(const msia::AlphaMatte& p, const msia::AlphaMatte& g) {
    double s = 0.0;
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x) s += (p.at(y, x) - g.at(y, x)) * (p.at(y, x) - g.at(y, x));
    return s / (static_cast<double>(p.height()) * p.width());
}

/// Explicit 2-D (2r+1)² Gaussian-derivative kernel, normalised by its own
/// Frobenius norm, applied as a true convolution with replicated borders.
inline double gradient_error(const msia::AlphaMatte& p, const msia::AlphaMatte& g, double sigma = 1.4) {
    const double eps = 1e-2;
    const int r = static_cast<int>(std::ceil(sigma * std::sqrt(-2.0 * std::log(std::sqrt(2.0 * M_PI) * sigma * eps))));
    const int n = 2 * r + 1;
    auto gauss = [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * M_PI)); };
    auto dgauss = [&](double x) { return -x * gauss(x) / (sigma * sigma); };
    std::vector<double> hx(n * n), hy(n * n);
    double norm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            hx[i * n + j] = gauss(i - r) * dgauss(j - r);
            norm += hx[i * n + j] * hx[i * n + j];
        }
    norm = std::sqrt(norm);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hx[i * n + j] /= norm;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hy[i * n + j] = hx[j * n + i];
    const int H = p.height(), W = p.width();
    auto conv_at = [&](const msia::AlphaMatte& im, const std::vector<double>& k, int y, int x) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int yy = std::clamp(y + r - i, 0, H - 1);
                const int xx = std::clamp(x + r - j, 0, W - 1);
                acc += k[i * n + j] * im.at(yy, xx);
            }
        return acc;
    };
    double s = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double mp = std::hypot(conv_at(p, hx, y, x), conv_at(p, hy, y, x));
            const double mg = std::hypot(conv_at(g, hx, y, x), conv_at(g, hy, y, x));
            s += (mp - mg) * (mp - mg);
        }
    return s / 1000.0;
}

/// Threshold levels, flood fill from every unvisited seed in column-major
/// order, keep the first-found largest region.
inline double connectivity_error(const msia::AlphaMatte& p, const msia::AlphaMatte& g, double theta = 0.15) {
    const int H = p.height(), W = p.width();
    std::vector<double> level(static_cast<std::size_t>(H) * W, -1.0);
    for (int k = 1; k <= 10; ++k) {
        const double t = k / 10.0;
        std::vector<int> label(static_cast<std::size_t>(H) * W, -1);
        auto inside = [&](int y, int x) { return p.at(y, x) >= t && g.at(y, x) >= t; };
        int best_label = -1, best_size = 0, next = 0;
        for (int x = 0; x < W; ++x)
            for (int y = 0; y < H; ++y) {
                if (!inside(y, x) || label[y * W + x] >= 0) continue;
                int size = 0;
                std::deque<std::pair<int, int>> q{{y, x}};
                label[y * W + x] = next;
                while (!q.empty()) {
                    auto [cy, cx] = q.front();
                    q.pop_front();
                    ++size;
                    const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
                    for (int d = 0; d < 4; ++d) {
                        const int ny = cy + dy[d], nx = cx + dx[d];
                        if (ny < 0 || nx < 0 || ny >= H || nx >= W) continue;
                        if (!inside(ny, nx) || label[ny * W + nx] >= 0) continue;
                        label[ny * W + nx] = next;
                        q.emplace_back(ny, nx);
                    }
                }
                if (size > best_size) {
                    best_size = size;
                    best_label = next;
                }
                ++next;
            }
        for (int i = 0; i < H * W; ++i)
            if (level[i] < 0 && !(best_label >= 0 && label[i] == best_label)) level[i] = (k - 1) / 10.0;
    }
    double s = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double l = level[y * W + x] < 0 ? 1.0 : level[y * W + x];
            const double dp = p.at(y, x) - l, dg = g.at(y, x) - l;
            const double phi_p = dp >= theta ? 1.0 - dp : 1.0;
            const double phi_g = dg >= theta ? 1.0 - dg : 1.0;
            s += std::fabs(phi_p - phi_g);
        }
    return s / 1000.0;
}

/// 1 − mean SSIM over every fully-contained 11×11 window, computed with an
/// explicit 2-D Gaussian weight table.
inline double ssim_loss(const msia::AlphaMatte& a, const msia::AlphaMatte& b, int win = 11, double sigma = 1.5) {
    const int r = win / 2;
    std::vector<double> w(win * win);
    double total = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            w[i * win + j] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2 * sigma * sigma));
            total += w[i * win + j];
        }
    for (double& v : w) v /= total;
    const double c1 = 1e-4, c2 = 9e-4;
    double acc = 0.0;
    int count = 0;
    for (int y = 0; y + win <= a.height(); ++y)
        for (int x = 0; x + win <= a.width(); ++x) {
            double mx = 0, my = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    mx += w[i * win + j] * a.at(y + i, x + j);
                    my += w[i * win + j] * b.at(y + i, x + j);
                }
            double vx = 0, vy = 0, cxy = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double dx = a.at(y + i, x + j) - mx, dy = b.at(y + i, x + j) - my;
                    vx += w[i * win + j] * dx * dx;
                    vy += w[i * win + j] * dy * dy;
                    cxy += w[i * win + j] * dx * dy;
                }
            acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return 1.0 - acc / count;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("msia_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
