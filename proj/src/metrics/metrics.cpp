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

#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::metrics {

namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

/// 1-D 'conv' along rows or columns with replicate border, kernel centered at `half`.
std::vector<double> conv_axis(const std::vector<double>& in, int h, int w, const std::vector<double>& k, bool along_x) {
    const int half = static_cast<int>(k.size()) / 2;
    std::vector<double> out(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i) {
                const int off = half - i;
                const int yy = along_x ? y : clampi(y + off, 0, h - 1);
                const int xx = along_x ? clampi(x + off, 0, w - 1) : x;
                acc += k[i] * in[static_cast<std::size_t>(yy) * w + xx];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

std::vector<double> gradient_magnitude(const AlphaMatte& a, const GaussianDerivative& f) {
    const int h = a.height(), w = a.width();
    // hx varies as dgauss across columns and as gauss down rows; hy is the transpose.
    const auto gx = conv_axis(conv_axis(a.values(), h, w, f.dgauss, true), h, w, f.gauss, false);
    const auto gy = conv_axis(conv_axis(a.values(), h, w, f.gauss, true), h, w, f.dgauss, false);
    std::vector<double> mag(a.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    return mag;
}

/// Disjoint-set forest over pixel indices.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

/// Largest 4-connected component of `mask`. Ties go to the component whose
/// first pixel in column-major order comes first.
std::vector<char> largest_component(const std::vector<char>& mask, int h, int w) {
    const int n = h * w;
    UnionFind uf(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int i = y * w + x;
            if (!mask[i]) continue;
            if (x + 1 < w && mask[i + 1]) uf.unite(i, i + 1);
            if (y + 1 < h && mask[i + w]) uf.unite(i, i + w);
        }
    std::vector<int> size(n, 0);
    for (int i = 0; i < n; ++i)
        if (mask[i]) ++size[uf.find(i)];
    int best = -1, best_size = 0;
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) {
            const int i = y * w + x;
            if (!mask[i]) continue;
            const int r = uf.find(i);
            if (size[r] > best_size) {
                best_size = size[r];
                best = r;
            }
        }
    std::vector<char> out(n, 0);
    if (best < 0) return out;
    for (int i = 0; i < n; ++i) out[i] = mask[i] && uf.find(i) == best;
    return out;
}

void require_unit(const AlphaMatte& m, const char* what) {
    for (double v : m.values())
        if (!std::isfinite(v)) throw ShapeError(fmt::format("{}: non-finite alpha value", what));
}

}  // namespace

double sad(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_dims(pred, gt, "sad");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.values()[i] - gt.values()[i]);
    return s / kSumScale;
}

double mse(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_dims(pred, gt, "mse");
    if (pred.empty()) throw ShapeError("mse: empty matte");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - gt.values()[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

GaussianDerivative gaussian_derivative(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError(fmt::format("gradient sigma must be positive, got {}", sigma));
    constexpr double kEpsilon = 1e-2;
    GaussianDerivative f;
    f.half = static_cast<int>(std::ceil(sigma * std::sqrt(-2.0 * std::log(std::sqrt(2.0 * M_PI) * sigma * kEpsilon))));
    const int size = 2 * f.half + 1;
    f.gauss.resize(size);
    f.dgauss.resize(size);
    for (int i = 0; i < size; ++i) {
        const double u = i - f.half;
        const double g = std::exp(-u * u / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
        f.gauss[i] = g;
        f.dgauss[i] = -u * g / (sigma * sigma);
    }
    // ‖gauss ⊗ dgauss‖₂ = ‖gauss‖₂·‖dgauss‖₂, so each factor is normalised on its own.
    for (auto* v : {&f.gauss, &f.dgauss}) {
        double n = 0.0;
        for (double x : *v) n += x * x;
        n = std::sqrt(n);
        for (double& x : *v) x /= n;
    }
    return f;
}

double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt, double sigma) {
    require_same_dims(pred, gt, "gradient_error");
    const GaussianDerivative f = gaussian_derivative(sigma);
    if (pred.height() <= f.half || pred.width() <= f.half)
        throw ShapeError(fmt::format("gradient_error: image {}x{} is smaller than the filter support (radius {})",
                                     pred.height(), pred.width(), f.half));
    require_unit(pred, "gradient_error");
    const auto mp = gradient_magnitude(pred, f);
    const auto mg = gradient_magnitude(gt, f);
    double s = 0.0;
    for (std::size_t i = 0; i < mp.size(); ++i) s += (mp[i] - mg[i]) * (mp[i] - mg[i]);
    return s / kSumScale;
}

double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, double step, double theta) {
    require_same_dims(pred, gt, "connectivity_error");
    if (!(step > 0.0 && step <= 1.0)) throw ConfigError(fmt::format("connectivity step must be in (0,1], got {}", step));
    require_unit(pred, "connectivity_error");
    const int h = pred.height(), w = pred.width(), n = h * w;
    const int levels = static_cast<int>(std::lround(1.0 / step));
    std::vector<double> l_map(n, -1.0);
    std::vector<char> mask(n);
    for (int k = 1; k <= levels; ++k) {
        const double t = static_cast<double>(k) / levels;
        for (int i = 0; i < n; ++i) mask[i] = pred.values()[i] >= t && gt.values()[i] >= t;
        const auto omega = largest_component(mask, h, w);
        const double prev = static_cast<double>(k - 1) / levels;
        for (int i = 0; i < n; ++i)
            if (l_map[i] == -1.0 && !omega[i]) l_map[i] = prev;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double l = l_map[i] == -1.0 ? 1.0 : l_map[i];
        const double dp = pred.values()[i] - l, dg = gt.values()[i] - l;
        const double phi_p = 1.0 - dp * (dp >= theta ? 1.0 : 0.0);
        const double phi_g = 1.0 - dg * (dg >= theta ? 1.0 : 0.0);
        s += std::abs(phi_p - phi_g);
    }
    return s / kSumScale;
}

ImageMetrics compute_metrics(const AlphaMatte& pred, const AlphaMatte& gt, std::string id) {
    ImageMetrics m;
    m.id = std::move(id);
    m.sad = sad(pred, gt);
    m.mse = mse(pred, gt);
    m.gradient = gradient_error(pred, gt);
    m.connectivity = connectivity_error(pred, gt);
    return m;
}

void MetricsReport::recompute_means() {
    means = ImageMetrics{};
    if (images.empty()) return;
    for (const auto& m : images) {
        means.sad += m.sad;
        means.mse += m.mse;
        means.gradient += m.gradient;
        means.connectivity += m.connectivity;
    }
    const double n = static_cast<double>(images.size());
    means.sad /= n;
    means.mse /= n;
    means.gradient /= n;
    means.connectivity /= n;
}

std::string record_id(const ManifestRecord& record) {
    return std::filesystem::path(record.composite).stem().string();
}

MetricsReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& predictions_dir,
                       const EvaluateOptions& options) {
    if (!std::filesystem::is_directory(predictions_dir))
        throw IoError(fmt::format("predictions directory not found: {}", predictions_dir.string()));
    MetricsReport report;
    report.label = options.label;
    for (const auto& r : manifest.records) {
        const std::string id = record_id(r);
        const auto pred_path = predictions_dir / (id + ".png");
        if (!std::filesystem::exists(pred_path)) {
            report.missing.push_back(id);
            continue;
        }
        const AlphaMatte gt = load_alpha(manifest.alpha_path(r));
        const AlphaMatte pred = load_alpha(pred_path);
        report.images.push_back(compute_metrics(pred, gt, id));
    }
    if (!report.missing.empty() && !options.allow_missing) {
        std::string list;
        for (std::size_t i = 0; i < report.missing.size() && i < 10; ++i) list += (i ? ", " : "") + report.missing[i];
        if (report.missing.size() > 10) list += ", ...";
        throw IoError(fmt::format("{} prediction(s) missing in {}: {}", report.missing.size(),
                                  predictions_dir.string(), list));
    }
    report.recompute_means();
    return report;
}

MetricsReport evaluate_with(const DatasetManifest& manifest, const Predictor& predict, const EvaluateOptions& options) {
    MetricsReport report;
    report.label = options.label;
    for (const auto& r : manifest.records) {
        auto [image, gt] = load_pair(manifest.composite_path(r), manifest.alpha_path(r));
        AlphaMatte pred = predict(r, image);
        report.images.push_back(compute_metrics(pred, gt, record_id(r)));
    }
    report.recompute_means();
    return report;
}

}  // namespace msia::metrics
