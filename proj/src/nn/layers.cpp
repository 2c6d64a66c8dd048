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

#include "nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Core>
#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::add_parameter(std::string name, Shape4 shape, bool decay) {
    if (find_parameter(name)) throw ConfigError(fmt::format("duplicate parameter '{}'", name));
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = Tensor(shape);
    p->grad = Tensor(shape);
    p->decay = decay;
    params_.push_back(std::move(p));
    return *params_.back();
}

Buffer& ParameterStore::add_buffer(std::string name, Shape4 shape, float fill) {
    if (find_buffer(name)) throw ConfigError(fmt::format("duplicate buffer '{}'", name));
    auto b = std::make_unique<Buffer>();
    b->name = std::move(name);
    b->value = Tensor(shape, fill);
    buffers_.push_back(std::move(b));
    return *buffers_.back();
}

Parameter* ParameterStore::find_parameter(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

Buffer* ParameterStore::find_buffer(const std::string& name) const {
    for (const auto& b : buffers_)
        if (b->name == name) return b.get();
    return nullptr;
}

std::size_t ParameterStore::parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p->value.numel();
    return total;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0f);
}

std::uint64_t name_hash(const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

void init_gaussian(Parameter& p, double stddev, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix(seed ^ name_hash(p.name)));
    std::normal_distribution<double> dist(0.0, stddev);
    for (float& v : p.value.storage()) v = static_cast<float>(dist(rng));
}

void init_constant(Parameter& p, float value) { p.value.fill(value); }

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(ParameterStore& store, const std::string& name, ConvSpec spec) : spec_(spec) {
    if (spec.in < 1 || spec.out < 1 || spec.kernel < 1 || spec.stride < 1 || spec.dilation < 1 || spec.groups < 1)
        throw ConfigError(fmt::format("conv '{}': invalid spec", name));
    if (spec.in % spec.groups != 0 || spec.out % spec.groups != 0)
        throw ConfigError(fmt::format("conv '{}': channels {}->{} not divisible by {} groups", name, spec.in,
                                      spec.out, spec.groups));
    pad_ = spec.padding >= 0 ? spec.padding : spec.dilation * (spec.kernel / 2);
    weight_ = &store.add_parameter(name + ".weight", {spec.out, spec.in / spec.groups, spec.kernel, spec.kernel}, true);
    if (spec.bias) bias_ = &store.add_parameter(name + ".bias", {1, spec.out, 1, 1}, true);
}

int Conv2d::output_extent(int extent) const {
    return (extent + 2 * pad_ - spec_.dilation * (spec_.kernel - 1) - 1) / spec_.stride + 1;
}

void Conv2d::im2col(const float* x, int h, int w, int oh, int ow, float* col) const {
    const int k = spec_.kernel;
    const int cin_g = spec_.in / spec_.groups;
    const std::size_t p = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < cin_g; ++c) {
        const float* src = x + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * p;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * spec_.stride - pad_ + ky * spec_.dilation;
                    float* dst = row + static_cast<std::size_t>(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        std::fill_n(dst, ow, 0.0f);
                        continue;
                    }
                    const float* srow = src + static_cast<std::size_t>(iy) * w;
                    const int x_off = kx * spec_.dilation - pad_;
                    if (spec_.stride == 1) {
                        // Valid ox range: 0 <= ox + x_off < w.
                        const int lo = std::clamp(-x_off, 0, ow);
                        const int hi = std::clamp(w - x_off, lo, ow);
                        std::fill_n(dst, lo, 0.0f);
                        std::copy(srow + lo + x_off, srow + hi + x_off, dst + lo);
                        std::fill(dst + hi, dst + ow, 0.0f);
                    } else {
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * spec_.stride + x_off;
                            dst[ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0f;
                        }
                    }
                }
            }
        }
    }
}

void Conv2d::col2im(const float* col, int h, int w, int oh, int ow, float* dx) const {
    const int k = spec_.kernel;
    const int cin_g = spec_.in / spec_.groups;
    const std::size_t p = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < cin_g; ++c) {
        float* dst = dx + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * p;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * spec_.stride - pad_ + ky * spec_.dilation;
                    if (iy < 0 || iy >= h) continue;
                    float* drow = dst + static_cast<std::size_t>(iy) * w;
                    const float* srow = row + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * spec_.stride - pad_ + kx * spec_.dilation;
                        if (ix >= 0 && ix < w) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x, bool keep) {
    if (x.c() != spec_.in)
        throw ShapeError(fmt::format("conv {}: expected {} input channels, got {}", weight_->name, spec_.in, x.c()));
    const int oh = output_extent(x.h());
    const int ow = output_extent(x.w());
    if (oh < 1 || ow < 1) throw ShapeError(fmt::format("conv {}: input {} too small", weight_->name, x.shape().str()));
    Tensor y({x.n(), spec_.out, oh, ow});

    const int g_count = spec_.groups;
    const int cin_g = spec_.in / g_count;
    const int cout_g = spec_.out / g_count;
    const int kdim = cin_g * spec_.kernel * spec_.kernel;
    const int p = oh * ow;
    const bool pointwise = spec_.kernel == 1 && spec_.stride == 1 && pad_ == 0;
    std::vector<float> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * p);

    for (int n = 0; n < x.n(); ++n) {
        for (int g = 0; g < g_count; ++g) {
            const float* xin = x.plane(n, g * cin_g);
            const float* cptr = xin;
            if (!pointwise) {
                im2col(xin, x.h(), x.w(), oh, ow, col.data());
                cptr = col.data();
            }
            ConstMap W(weight_->value.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
            ConstMap C(cptr, kdim, p);
            MutMap Y(y.plane(n, g * cout_g), cout_g, p);
            Y.noalias() = W * C;
        }
        if (bias_) {
            for (int o = 0; o < spec_.out; ++o) {
                float* yp = y.plane(n, o);
                const float b = bias_->value.data()[o];
                for (int i = 0; i < p; ++i) yp[i] += b;
            }
        }
    }
    if (keep) input_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    if (input_.empty()) throw Error(fmt::format("conv {}: backward without cached forward", weight_->name));
    const Tensor& x = input_;
    const int oh = dy.h(), ow = dy.w();
    const int g_count = spec_.groups;
    const int cin_g = spec_.in / g_count;
    const int cout_g = spec_.out / g_count;
    const int kdim = cin_g * spec_.kernel * spec_.kernel;
    const int p = oh * ow;
    const bool pointwise = spec_.kernel == 1 && spec_.stride == 1 && pad_ == 0;

    Tensor dx(x.shape());
    std::vector<float> col(static_cast<std::size_t>(kdim) * p);
    std::vector<float> dcol(pointwise ? 0 : static_cast<std::size_t>(kdim) * p);

    for (int n = 0; n < x.n(); ++n) {
        for (int g = 0; g < g_count; ++g) {
            const float* xin = x.plane(n, g * cin_g);
            const float* cptr = xin;
            if (!pointwise) {
                im2col(xin, x.h(), x.w(), oh, ow, col.data());
                cptr = col.data();
            }
            ConstMap C(cptr, kdim, p);
            ConstMap DY(dy.plane(n, g * cout_g), cout_g, p);
            MutMap DW(weight_->grad.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
            DW.noalias() += DY * C.transpose();

            ConstMap W(weight_->value.data() + static_cast<std::size_t>(g) * cout_g * kdim, cout_g, kdim);
            if (pointwise) {
                MutMap DX(dx.plane(n, g * cin_g), kdim, p);
                DX.noalias() += W.transpose() * DY;
            } else {
                MutMap DC(dcol.data(), kdim, p);
                DC.noalias() = W.transpose() * DY;
                col2im(dcol.data(), x.h(), x.w(), oh, ow, dx.plane(n, g * cin_g));
            }
        }
        if (bias_) {
            for (int o = 0; o < spec_.out; ++o) {
                const float* g = dy.plane(n, o);
                double acc = 0.0;
                for (int i = 0; i < p; ++i) acc += g[i];
                bias_->grad.data()[o] += static_cast<float>(acc);
            }
        }
    }
    input_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(ParameterStore& store, const std::string& name, int channels)
    : channels_(channels),
      gamma_(&store.add_parameter(name + ".weight", {1, channels, 1, 1}, false)),
      beta_(&store.add_parameter(name + ".bias", {1, channels, 1, 1}, false)),
      running_mean_(&store.add_buffer(name + ".running_mean", {1, channels, 1, 1}, 0.0f)),
      running_var_(&store.add_buffer(name + ".running_var", {1, channels, 1, 1}, 1.0f)) {
    gamma_->value.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.c() != channels_)
        throw ShapeError(fmt::format("batchnorm {}: expected {} channels, got {}", gamma_->name, channels_, x.c()));
    Tensor y(x.shape());
    const std::size_t plane = x.shape().plane();
    const std::size_t count = plane * static_cast<std::size_t>(x.n());
    inv_std_.assign(channels_, 0.0f);
    if (train) xhat_ = Tensor(x.shape());
    cached_train_ = train;

    for (int c = 0; c < channels_; ++c) {
        double mean, var;
        if (train) {
            double s = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
            }
            mean = s / static_cast<double>(count);
            double ss = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                const float* p = x.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean;
                    ss += d * d;
                }
            }
            var = ss / static_cast<double>(count);
            const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
            float& rm = running_mean_->value.data()[c];
            float& rv = running_var_->value.data()[c];
            rm = static_cast<float>((1.0 - kMomentum) * rm + kMomentum * mean);
            rv = static_cast<float>((1.0 - kMomentum) * rv + kMomentum * unbiased);
        } else {
            mean = running_mean_->value.data()[c];
            var = running_var_->value.data()[c];
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(var + kEps));
        inv_std_[c] = inv;
        const float g = gamma_->value.data()[c];
        const float b = beta_->value.data()[c];
        const float m = static_cast<float>(mean);
        for (int n = 0; n < x.n(); ++n) {
            const float* p = x.plane(n, c);
            float* q = y.plane(n, c);
            float* xh = train ? xhat_.plane(n, c) : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const float h = (p[i] - m) * inv;
                if (xh) xh[i] = h;
                q[i] = g * h + b;
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    if (!cached_train_ || xhat_.empty()) throw Error(fmt::format("batchnorm {}: backward requires a training forward", gamma_->name));
    require_shape(dy, xhat_.shape(), "batchnorm backward");
    Tensor dx(dy.shape());
    const std::size_t plane = dy.shape().plane();
    const double count = static_cast<double>(plane * static_cast<std::size_t>(dy.n()));
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < dy.n(); ++n) {
            const float* g = dy.plane(n, c);
            const float* h = xhat_.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += g[i];
                sum_dy_xhat += static_cast<double>(g[i]) * h[i];
            }
        }
        gamma_->grad.data()[c] += static_cast<float>(sum_dy_xhat);
        beta_->grad.data()[c] += static_cast<float>(sum_dy);
        const double scale = gamma_->value.data()[c] * inv_std_[c] / count;
        const double mean_dy = sum_dy, mean_dyx = sum_dy_xhat;
        for (int n = 0; n < dy.n(); ++n) {
            const float* g = dy.plane(n, c);
            const float* h = xhat_.plane(n, c);
            float* d = dx.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i)
                d[i] = static_cast<float>(scale * (count * g[i] - mean_dy - h[i] * mean_dyx));
        }
    }
    xhat_ = Tensor();
    return dx;
}

// ---------------------------------------------------------------------------
// Pointwise activations

Tensor Relu::forward(const Tensor& x, bool keep) {
    Tensor y = x;
    for (float& v : y.storage()) v = v > 0.0f ? v : 0.0f;
    if (keep) output_ = y;
    return y;
}

Tensor Relu::backward(const Tensor& dy) const {
    require_shape(dy, output_.shape(), "relu backward");
    Tensor dx = dy;
    const float* out = output_.data();
    float* d = dx.data();
    for (std::size_t i = 0; i < dx.numel(); ++i)
        if (!(out[i] > 0.0f)) d[i] = 0.0f;
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x, bool keep) {
    Tensor y = x;
    for (float& v : y.storage()) v = 1.0f / (1.0f + std::exp(-v));
    if (keep) output_ = y;
    return y;
}

Tensor Sigmoid::backward(const Tensor& dy) const {
    require_shape(dy, output_.shape(), "sigmoid backward");
    Tensor dx = dy;
    const float* out = output_.data();
    float* d = dx.data();
    for (std::size_t i = 0; i < dx.numel(); ++i) d[i] *= out[i] * (1.0f - out[i]);
    return dx;
}

Tensor MaxPool2d::forward(const Tensor& x, bool keep) {
    const int oh = (x.h() + 2 - 3) / 2 + 1;
    const int ow = (x.w() + 2 - 3) / 2 + 1;
    Tensor y({x.n(), x.c(), oh, ow});
    std::vector<std::uint32_t> arg(y.numel());
    std::size_t o = 0;
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const float* src = x.plane(n, c);
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::uint32_t best_i = 0;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * 2 - 1 + ky;
                        if (iy < 0 || iy >= x.h()) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * 2 - 1 + kx;
                            if (ix < 0 || ix >= x.w()) continue;
                            const std::uint32_t idx = static_cast<std::uint32_t>(iy * x.w() + ix);
                            if (src[idx] > best) {
                                best = src[idx];
                                best_i = idx;
                            }
                        }
                    }
                    y.data()[o] = best;
                    arg[o] = best_i;
                }
            }
        }
    }
    if (keep) {
        in_shape_ = x.shape();
        argmax_ = std::move(arg);
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) const {
    Tensor dx(in_shape_);
    std::size_t o = 0;
    const std::size_t plane_out = dy.shape().plane();
    for (int n = 0; n < dy.n(); ++n)
        for (int c = 0; c < dy.c(); ++c) {
            float* d = dx.plane(n, c);
            for (std::size_t i = 0; i < plane_out; ++i, ++o) d[argmax_[o]] += dy.data()[o];
        }
    return dx;
}

}  // namespace msia::nn
