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

#include "losses/losses.hpp"

#include <cmath>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::losses {

namespace {

/// Row-major double plane.
struct Grid {
    int h = 0, w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}
    double& operator()(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double operator()(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Grid from_matte(const AlphaMatte& m) {
    Grid g(m.height(), m.width());
    g.v = m.values();
    return g;
}

/// Separable valid correlation with a k-tap kernel: (h−k+1)×(w−k+1).
Grid filter_valid(const Grid& in, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    Grid tmp(in.h, in.w - n + 1);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < tmp.w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * in(y, x + i);
            tmp(y, x) = acc;
        }
    Grid out(in.h - n + 1, tmp.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * tmp(y + i, x);
            out(y, x) = acc;
        }
    return out;
}

/// Adjoint of filter_valid: scatters a valid-sized map back to h×w.
Grid filter_valid_adjoint(const Grid& in, const std::vector<double>& k, int h, int w) {
    const int n = static_cast<int>(k.size());
    Grid tmp(h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int i = 0; i < n; ++i) tmp(y + i, x) += k[i] * in(y, x);
    Grid out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int i = 0; i < n; ++i) out(y, x + i) += k[i] * tmp(y, x);
    return out;
}

Grid multiply(const Grid& a, const Grid& b) {
    Grid out(a.h, a.w);
    for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

void check_inputs(const AlphaMatte& pred, const AlphaMatte& gt, const SsimParams& p) {
    require_same_dims(pred, gt, "ssim_loss");
    if (p.window < 1 || p.window % 2 == 0) throw ConfigError(fmt::format("SSIM window must be odd, got {}", p.window));
    if (!p.global_statistics && (pred.height() < p.window || pred.width() < p.window))
        throw ShapeError(fmt::format("ssim_loss: image {}x{} is smaller than the {}x{} window", pred.height(),
                                     pred.width(), p.window, p.window));
}

/// Per-position SSIM terms and the partials of SSIM w.r.t. (μx, E[x²], E[xy]).
struct SsimMaps {
    double mean_ssim = 0.0;
    Grid d_mu, d_exx, d_exy;
};

SsimMaps ssim_windowed(const Grid& x, const Grid& y, const SsimParams& p, bool partials) {
    const auto k = p.window_1d();
    const Grid mx = filter_valid(x, k), my = filter_valid(y, k);
    const Grid exx = filter_valid(multiply(x, x), k), eyy = filter_valid(multiply(y, y), k);
    const Grid exy = filter_valid(multiply(x, y), k);
    const double c1 = p.c1(), c2 = p.c2();
    SsimMaps out;
    if (partials) out.d_mu = out.d_exx = out.d_exy = Grid(mx.h, mx.w);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
        const double ux = mx.v[i], uy = my.v[i];
        const double sxx = exx.v[i] - ux * ux, syy = eyy.v[i] - uy * uy, sxy = exy.v[i] - ux * uy;
        const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * sxy + c2;
        const double b1 = ux * ux + uy * uy + c1, b2 = sxx + syy + c2;
        const double d = b1 * b2;
        const double s = a1 * a2 / d;
        acc += s;
        if (partials) {
            // sxx and sxy depend on μx through −μx² and −μx·μy.
            out.d_mu.v[i] = (2.0 * uy * (a2 - a1) - s * 2.0 * ux * (b2 - b1)) / d;
            out.d_exx.v[i] = -s / b2;
            out.d_exy.v[i] = 2.0 * a1 / d;
        }
    }
    out.mean_ssim = acc / static_cast<double>(mx.v.size());
    return out;
}

struct GlobalSsim {
    double s, d_mu, d_exx, d_exy;
};

GlobalSsim ssim_global(const Grid& x, const Grid& y, const SsimParams& p) {
    const double n = static_cast<double>(x.v.size());
    double sx = 0, sy = 0, sxx_ = 0, syy_ = 0, sxy_ = 0;
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        sx += x.v[i];
        sy += y.v[i];
        sxx_ += x.v[i] * x.v[i];
        syy_ += y.v[i] * y.v[i];
        sxy_ += x.v[i] * y.v[i];
    }
    const double ux = sx / n, uy = sy / n;
    const double sxx = sxx_ / n - ux * ux, syy = syy_ / n - uy * uy, sxy = sxy_ / n - ux * uy;
    const double c1 = p.c1(), c2 = p.c2();
    const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * sxy + c2;
    const double b1 = ux * ux + uy * uy + c1, b2 = sxx + syy + c2;
    const double d = b1 * b2;
    const double s = a1 * a2 / d;
    return {s, (2.0 * uy * (a2 - a1) - s * 2.0 * ux * (b2 - b1)) / d, -s / b2, 2.0 * a1 / d};
}

}  // namespace

std::vector<double> SsimParams::window_1d() const {
    std::vector<double> k(window);
    const int half = window / 2;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double d = i - half;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

L1Loss l1_loss(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_dims(pred, gt, "l1_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred.values()[i] - gt.values()[i]);
    return {sum, sum / static_cast<double>(pred.size())};
}

double ssim_loss(const AlphaMatte& pred, const AlphaMatte& gt, const SsimParams& params) {
    check_inputs(pred, gt, params);
    const Grid x = from_matte(pred), y = from_matte(gt);
    if (params.global_statistics) return 1.0 - ssim_global(x, y, params).s;
    return 1.0 - ssim_windowed(x, y, params, false).mean_ssim;
}

double total_loss(const AlphaMatte& pred, const AlphaMatte& gt, const LossWeights& weights, const SsimParams& params) {
    const double l1 = l1_loss(pred, gt).mean;
    const double ss = weights.lambda2 != 0.0 ? ssim_loss(pred, gt, params) : 0.0;
    return weights.lambda1 * l1 + weights.lambda2 * ss;
}

LossWeights lambda_schedule(int epoch) {
    if (epoch < 1) throw ConfigError(fmt::format("epochs are 1-based, got {}", epoch));
    return epoch == 1 ? LossWeights{1.0, 0.1} : LossWeights{1.0, 0.025};
}

AlphaMatte l1_mean_gradient(const AlphaMatte& pred, const AlphaMatte& gt) {
    require_same_dims(pred, gt, "l1 gradient");
    AlphaMatte g(pred.height(), pred.width());
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - gt.values()[i];
        g.values()[i] = d > 0.0 ? inv : d < 0.0 ? -inv : 0.0;
    }
    return g;
}

AlphaMatte ssim_loss_gradient(const AlphaMatte& pred, const AlphaMatte& gt, const SsimParams& params) {
    check_inputs(pred, gt, params);
    const Grid x = from_matte(pred), y = from_matte(gt);
    AlphaMatte g(pred.height(), pred.width());
    if (params.global_statistics) {
        const GlobalSsim s = ssim_global(x, y, params);
        const double n = static_cast<double>(x.v.size());
        for (std::size_t i = 0; i < x.v.size(); ++i)
            g.values()[i] = -(s.d_mu + 2.0 * x.v[i] * s.d_exx + y.v[i] * s.d_exy) / n;
        return g;
    }
    const SsimMaps maps = ssim_windowed(x, y, params, true);
    const auto k = params.window_1d();
    const Grid t_mu = filter_valid_adjoint(maps.d_mu, k, x.h, x.w);
    const Grid t_xx = filter_valid_adjoint(maps.d_exx, k, x.h, x.w);
    const Grid t_xy = filter_valid_adjoint(maps.d_exy, k, x.h, x.w);
    const double inv_m = 1.0 / static_cast<double>(maps.d_mu.v.size());
    for (std::size_t i = 0; i < x.v.size(); ++i)
        g.values()[i] = -inv_m * (t_mu.v[i] + 2.0 * x.v[i] * t_xx.v[i] + y.v[i] * t_xy.v[i]);
    return g;
}

LossEvaluation evaluate_total_loss(const AlphaMatte& pred, const AlphaMatte& gt, const LossWeights& weights,
                                   const SsimParams& params) {
    LossEvaluation e;
    e.l1 = l1_loss(pred, gt).mean;
    e.ssim = ssim_loss(pred, gt, params);
    e.total = weights.lambda1 * e.l1 + weights.lambda2 * e.ssim;
    e.gradient = l1_mean_gradient(pred, gt);
    for (double& v : e.gradient.values()) v *= weights.lambda1;
    if (weights.lambda2 != 0.0) {
        const AlphaMatte gs = ssim_loss_gradient(pred, gt, params);
        for (std::size_t i = 0; i < gs.size(); ++i) e.gradient.values()[i] += weights.lambda2 * gs.values()[i];
    }
    return e;
}

}  // namespace msia::losses
