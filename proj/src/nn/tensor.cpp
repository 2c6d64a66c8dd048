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

#include "nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::nn {

std::string Shape4::str() const { return fmt::format("[{}, {}, {}, {}]", n, c, h, w); }

Tensor::Tensor(Shape4 shape, float fill) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
        throw ShapeError(fmt::format("negative tensor extent {}", shape.str()));
    data_.assign(shape.numel(), fill);
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void require_shape(const Tensor& t, const Shape4& expected, const char* what) {
    if (t.shape() != expected)
        throw ShapeError(fmt::format("{}: expected {}, got {}", what, expected.str(), t.shape().str()));
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
        throw ShapeError(fmt::format("concat: {} vs {}", a.shape().str(), b.shape().str()));
    Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
    const std::size_t pa = static_cast<std::size_t>(a.c()) * a.shape().plane();
    const std::size_t pb = static_cast<std::size_t>(b.c()) * b.shape().plane();
    for (int n = 0; n < a.n(); ++n) {
        std::copy_n(a.plane(n, 0), pa, out.plane(n, 0));
        std::copy_n(b.plane(n, 0), pb, out.plane(n, a.c()));
    }
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int channels) {
    if (channels < 0 || channels > t.c())
        throw ShapeError(fmt::format("split at {} of {}", channels, t.shape().str()));
    Tensor a({t.n(), channels, t.h(), t.w()});
    Tensor b({t.n(), t.c() - channels, t.h(), t.w()});
    const std::size_t pa = static_cast<std::size_t>(a.c()) * a.shape().plane();
    const std::size_t pb = static_cast<std::size_t>(b.c()) * b.shape().plane();
    for (int n = 0; n < t.n(); ++n) {
        std::copy_n(t.plane(n, 0), pa, a.plane(n, 0));
        std::copy_n(t.plane(n, channels), pb, b.plane(n, 0));
    }
    return {std::move(a), std::move(b)};
}

namespace {

struct Tap {
    int i0;
    int i1;
    float l0;
    float l1;
};

std::vector<Tap> bilinear_taps(int in, int out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = std::max(0.0, (o + 0.5) * scale - 0.5);
        int i0 = std::min(static_cast<int>(src), in - 1);
        int i1 = i0 < in - 1 ? i0 + 1 : i0;
        float l1 = static_cast<float>(src - i0);
        taps[o] = {i0, i1, 1.0f - l1, l1};
    }
    return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize: empty target");
    if (x.h() == out_h && x.w() == out_w) return x;
    const auto ty = bilinear_taps(x.h(), out_h);
    const auto tx = bilinear_taps(x.w(), out_w);
    Tensor out({x.n(), x.c(), out_h, out_w});
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const float* src = x.plane(n, c);
            float* dst = out.plane(n, c);
            for (int oy = 0; oy < out_h; ++oy) {
                const float* r0 = src + static_cast<std::size_t>(ty[oy].i0) * x.w();
                const float* r1 = src + static_cast<std::size_t>(ty[oy].i1) * x.w();
                for (int ox = 0; ox < out_w; ++ox) {
                    const Tap& t = tx[ox];
                    dst[static_cast<std::size_t>(oy) * out_w + ox] =
                        ty[oy].l0 * (t.l0 * r0[t.i0] + t.l1 * r0[t.i1]) + ty[oy].l1 * (t.l0 * r1[t.i0] + t.l1 * r1[t.i1]);
                }
            }
        }
    }
    return out;
}

Tensor bilinear_resize_backward(const Tensor& dy, int in_h, int in_w) {
    if (dy.h() == in_h && dy.w() == in_w) return dy;
    const auto ty = bilinear_taps(in_h, dy.h());
    const auto tx = bilinear_taps(in_w, dy.w());
    Tensor dx({dy.n(), dy.c(), in_h, in_w});
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < dy.c(); ++c) {
            const float* g = dy.plane(n, c);
            float* d = dx.plane(n, c);
            for (int oy = 0; oy < dy.h(); ++oy) {
                float* r0 = d + static_cast<std::size_t>(ty[oy].i0) * in_w;
                float* r1 = d + static_cast<std::size_t>(ty[oy].i1) * in_w;
                for (int ox = 0; ox < dy.w(); ++ox) {
                    const Tap& t = tx[ox];
                    const float v = g[static_cast<std::size_t>(oy) * dy.w() + ox];
                    r0[t.i0] += ty[oy].l0 * t.l0 * v;
                    r0[t.i1] += ty[oy].l0 * t.l1 * v;
                    r1[t.i0] += ty[oy].l1 * t.l0 * v;
                    r1[t.i1] += ty[oy].l1 * t.l1 * v;
                }
            }
        }
    }
    return dx;
}

Tensor global_average_pool(const Tensor& x) {
    Tensor out({x.n(), x.c(), 1, 1});
    const std::size_t p = x.shape().plane();
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c) {
            const float* s = x.plane(n, c);
            double acc = 0.0;
            for (std::size_t i = 0; i < p; ++i) acc += s[i];
            out.at(n, c, 0, 0) = static_cast<float>(acc / static_cast<double>(p));
        }
    return out;
}

Tensor global_average_pool_backward(const Tensor& dy, int in_h, int in_w) {
    Tensor dx({dy.n(), dy.c(), in_h, in_w});
    const std::size_t p = dx.shape().plane();
    for (int n = 0; n < dy.n(); ++n)
        for (int c = 0; c < dy.c(); ++c) std::fill_n(dx.plane(n, c), p, dy.at(n, c, 0, 0) / static_cast<float>(p));
    return dx;
}

void add_inplace(Tensor& a, const Tensor& b) {
    require_shape(b, a.shape(), "add");
    float* pa = a.data();
    const float* pb = b.data();
    for (std::size_t i = 0; i < a.numel(); ++i) pa[i] += pb[i];
}

void scale_inplace(Tensor& a, float s) {
    for (float& v : a.storage()) v *= s;
}

double dot(const Tensor& a, const Tensor& b) {
    require_shape(b, a.shape(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(a.data()[i]) * b.data()[i];
    return acc;
}

double squared_norm(const Tensor& t) { return dot(t, t); }

}  // namespace msia::nn
