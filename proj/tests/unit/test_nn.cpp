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

#include <doctest.h>

#include <cmath>
#include <random>

#include "core/errors.hpp"
#include "nn/layers.hpp"
#include "nn/tensor.hpp"

using namespace msia;
using namespace msia::nn;

namespace {

Tensor random_tensor(Shape4 s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(s);
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = u(rng);
    return t;
}

void randomize(Parameter& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-0.5f, 0.5f);
    for (std::size_t i = 0; i < p.value.numel(); ++i) p.value.data()[i] = u(rng);
}

/// Direct nested-loop convolution used as the forward oracle.
Tensor conv_direct(const Tensor& x, const Tensor& w, const Tensor* b, const ConvSpec& s) {
    const int pad = s.padding >= 0 ? s.padding : s.dilation * (s.kernel / 2);
    const int oh = (x.h() + 2 * pad - s.dilation * (s.kernel - 1) - 1) / s.stride + 1;
    const int ow = (x.w() + 2 * pad - s.dilation * (s.kernel - 1) - 1) / s.stride + 1;
    const int cin_g = s.in / s.groups, cout_g = s.out / s.groups;
    Tensor y({x.n(), s.out, oh, ow});
    for (int n = 0; n < x.n(); ++n)
        for (int o = 0; o < s.out; ++o) {
            const int g = o / cout_g;
            for (int yy = 0; yy < oh; ++yy)
                for (int xx = 0; xx < ow; ++xx) {
                    double acc = b ? b->data()[o] : 0.0;
                    for (int ci = 0; ci < cin_g; ++ci)
                        for (int ky = 0; ky < s.kernel; ++ky)
                            for (int kx = 0; kx < s.kernel; ++kx) {
                                const int iy = yy * s.stride - pad + ky * s.dilation;
                                const int ix = xx * s.stride - pad + kx * s.dilation;
                                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                                acc += static_cast<double>(w.at(o, ci, ky, kx)) * x.at(n, g * cin_g + ci, iy, ix);
                            }
                    y.at(n, o, yy, xx) = static_cast<float>(acc);
                }
        }
    return y;
}

const ConvSpec kSpecs[] = {
    {4, 6, 3, 1, 1, 1, false, -1}, {4, 6, 3, 2, 1, 1, true, -1}, {8, 8, 3, 1, 2, 4, false, -1},
    {6, 4, 1, 1, 1, 1, true, 0},   {4, 8, 3, 2, 1, 2, false, -1}, {4, 4, 3, 1, 6, 1, false, -1},
};

}  // namespace

TEST_CASE("conv forward matches the direct loop") {
    std::mt19937_64 rng(1);
    for (const ConvSpec& s : kSpecs) {
        ParameterStore store;
        Conv2d conv(store, "c", s);
        randomize(conv.weight(), rng);
        if (conv.bias()) randomize(*conv.bias(), rng);
        const Tensor x = random_tensor({2, s.in, 9, 7}, rng);
        const Tensor y = conv.forward(x, false);
        const Tensor ref = conv_direct(x, conv.weight().value, conv.bias() ? &conv.bias()->value : nullptr, s);
        REQUIRE(y.shape() == ref.shape());
        for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-4));
    }
}

TEST_CASE("conv backward is the adjoint of forward") {
    std::mt19937_64 rng(2);
    for (const ConvSpec& s : kSpecs) {
        ParameterStore store;
        Conv2d conv(store, "c", s);
        randomize(conv.weight(), rng);
        const Tensor x = random_tensor({2, s.in, 8, 10}, rng);
        const Tensor y = conv.forward(x, true);
        const Tensor dy = random_tensor(y.shape(), rng);
        store.zero_grad();
        const Tensor dx = conv.backward(dy);

        // Input: <conv(v), dy> − <conv(0), dy> = <v, dx> for any direction v.
        const Tensor v = random_tensor(x.shape(), rng);
        double lhs = dot(conv.forward(v, false), dy);
        if (conv.bias()) lhs -= dot(conv.forward(Tensor(x.shape()), false), dy);
        CHECK(lhs == doctest::Approx(dot(v, dx)).epsilon(1e-4));

        // Weights: the output is linear in W as well.
        const Tensor dw = random_tensor(conv.weight().value.shape(), rng);
        const Tensor w0 = conv.weight().value;
        const Tensor y0 = conv.forward(x, false);
        Tensor w1 = w0;
        add_inplace(w1, dw);
        conv.weight().value = w1;
        const double directional = dot(conv.forward(x, false), dy) - dot(y0, dy);
        CHECK(directional == doctest::Approx(dot(dw, conv.weight().grad)).epsilon(1e-3));
        conv.weight().value = w0;

        if (conv.bias()) {
            double expect = 0.0;
            for (int n = 0; n < dy.n(); ++n)
                for (int h = 0; h < dy.h(); ++h)
                    for (int w = 0; w < dy.w(); ++w) expect += dy.at(n, 0, h, w);
            CHECK(conv.bias()->grad.data()[0] == doctest::Approx(expect).epsilon(1e-4));
        }
    }
}

TEST_CASE("batch norm train-mode gradient matches finite differences") {
    std::mt19937_64 rng(3);
    ParameterStore store;
    BatchNorm2d bn(store, "bn", 3);
    randomize(*store.find_parameter("bn.weight"), rng);
    randomize(*store.find_parameter("bn.bias"), rng);
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    const Tensor dy = random_tensor(x.shape(), rng);
    bn.forward(x, true);
    store.zero_grad();
    const Tensor dx = bn.backward(dy);
    const Tensor v = random_tensor(x.shape(), rng);
    const float h = 1e-2f;
    Tensor xp = x, xm = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        xp.data()[i] += h * v.data()[i];
        xm.data()[i] -= h * v.data()[i];
    }
    const double fd = (dot(bn.forward(xp, true), dy) - dot(bn.forward(xm, true), dy)) / (2.0 * h);
    CHECK(fd == doctest::Approx(dot(v, dx)).epsilon(2e-2));
}

TEST_CASE("batch norm running statistics use the unbiased variance") {
    ParameterStore store;
    BatchNorm2d bn(store, "bn", 1);
    Tensor x({1, 1, 1, 4});
    const float vals[4] = {1, 2, 3, 6};
    for (int i = 0; i < 4; ++i) x.data()[i] = vals[i];
    bn.forward(x, true);
    CHECK(store.find_buffer("bn.running_mean")->value.data()[0] == doctest::Approx(0.1 * 3.0));
    CHECK(store.find_buffer("bn.running_var")->value.data()[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
    CHECK_FALSE(store.find_parameter("bn.weight")->decay);
}

TEST_CASE("batch norm eval mode applies the running estimates") {
    ParameterStore store;
    BatchNorm2d bn(store, "bn", 1);
    store.find_buffer("bn.running_mean")->value.data()[0] = 2.0f;
    store.find_buffer("bn.running_var")->value.data()[0] = 4.0f;
    store.find_parameter("bn.weight")->value.data()[0] = 3.0f;
    store.find_parameter("bn.bias")->value.data()[0] = 1.0f;
    Tensor x({1, 1, 1, 1}, 6.0f);
    CHECK(bn.forward(x, false).data()[0] == doctest::Approx(1.0 + 3.0 * 4.0 / std::sqrt(4.0 + 1e-5)));
}

TEST_CASE("relu and sigmoid gradients") {
    std::mt19937_64 rng(4);
    const Tensor x = random_tensor({1, 2, 3, 3}, rng, -2.0f, 2.0f);
    const Tensor dy = random_tensor(x.shape(), rng);
    Relu relu;
    const Tensor r = relu.forward(x, true);
    const Tensor dr = relu.backward(dy);
    Sigmoid sig;
    const Tensor s = sig.forward(x, true);
    const Tensor ds = sig.backward(dy);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        CHECK(r.data()[i] == std::max(0.0f, x.data()[i]));
        CHECK(dr.data()[i] == (x.data()[i] > 0 ? dy.data()[i] : 0.0f));
        const double sv = 1.0 / (1.0 + std::exp(-static_cast<double>(x.data()[i])));
        CHECK(s.data()[i] == doctest::Approx(sv).epsilon(1e-6));
        CHECK(ds.data()[i] == doctest::Approx(dy.data()[i] * sv * (1 - sv)).epsilon(1e-5));
    }
}

TEST_CASE("max pool picks window maxima and routes gradients to them") {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({1, 2, 7, 6}, rng);
    MaxPool2d pool;
    const Tensor y = pool.forward(x, true);
    REQUIRE(y.shape() == Shape4{1, 2, 4, 3});
    for (int c = 0; c < 2; ++c)
        for (int oy = 0; oy < 4; ++oy)
            for (int ox = 0; ox < 3; ++ox) {
                float m = -INFINITY;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) {
                        const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
                        if (iy >= 0 && ix >= 0 && iy < 7 && ix < 6) m = std::max(m, x.at(0, c, iy, ix));
                    }
                CHECK(y.at(0, c, oy, ox) == m);
            }
    const Tensor dy = random_tensor(y.shape(), rng);
    const Tensor dx = pool.backward(dy);
    double sum_dx = 0, sum_dy = 0;
    for (std::size_t i = 0; i < dx.numel(); ++i) sum_dx += dx.data()[i];
    for (std::size_t i = 0; i < dy.numel(); ++i) sum_dy += dy.data()[i];
    CHECK(sum_dx == doctest::Approx(sum_dy).epsilon(1e-5));
}

TEST_CASE("bilinear resize uses half-pixel centres") {
    Tensor x({1, 1, 1, 2});
    x.data()[0] = 0.0f;
    x.data()[1] = 1.0f;
    const Tensor y = bilinear_resize(x, 1, 4);
    // Source x = (i + 0.5)/2 − 0.5 → −0.25 (clamped to 0), 0.25, 0.75, 1.25 (edge).
    CHECK(y.data()[0] == doctest::Approx(0.0));
    CHECK(y.data()[1] == doctest::Approx(0.25));
    CHECK(y.data()[2] == doctest::Approx(0.75));
    CHECK(y.data()[3] == doctest::Approx(1.0));
}

TEST_CASE("bilinear resize backward is the adjoint") {
    std::mt19937_64 rng(6);
    for (auto [ih, iw, oh, ow] : {std::array{4, 4, 8, 8}, {4, 5, 16, 20}, {8, 8, 4, 4}, {3, 5, 7, 2}}) {
        const Tensor x = random_tensor({2, 3, ih, iw}, rng);
        const Tensor dy = random_tensor({2, 3, oh, ow}, rng);
        CHECK(dot(bilinear_resize(x, oh, ow), dy) ==
              doctest::Approx(dot(x, bilinear_resize_backward(dy, ih, iw))).epsilon(1e-4));
    }
}

TEST_CASE("global average pool and its adjoint") {
    std::mt19937_64 rng(7);
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    const Tensor g = global_average_pool(x);
    REQUIRE(g.shape() == Shape4{2, 3, 1, 1});
    double s = 0;
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 5; ++w) s += x.at(1, 2, h, w);
    CHECK(g.at(1, 2, 0, 0) == doctest::Approx(s / 20));
    const Tensor dy = random_tensor(g.shape(), rng);
    CHECK(dot(g, dy) == doctest::Approx(dot(x, global_average_pool_backward(dy, 4, 5))).epsilon(1e-5));
}

TEST_CASE("concat and split are inverse") {
    std::mt19937_64 rng(8);
    const Tensor a = random_tensor({2, 3, 4, 4}, rng), b = random_tensor({2, 5, 4, 4}, rng);
    const Tensor c = concat_channels(a, b);
    CHECK(c.shape() == Shape4{2, 8, 4, 4});
    const auto [a2, b2] = split_channels(c, 3);
    CHECK(a2 == a);
    CHECK(b2 == b);
    CHECK_THROWS_AS(concat_channels(a, random_tensor({2, 5, 4, 3}, rng)), ShapeError);
}

TEST_CASE("initialisation is keyed by seed and parameter name") {
    ParameterStore s1, s2;
    Parameter& a = s1.add_parameter("layer.weight", {64, 64, 3, 3}, true);
    Parameter& b = s2.add_parameter("layer.weight", {64, 64, 3, 3}, true);
    Parameter& c = s2.add_parameter("other.weight", {64, 64, 3, 3}, true);
    init_gaussian(a, 0.01, 5);
    init_gaussian(b, 0.01, 5);
    init_gaussian(c, 0.01, 5);
    CHECK(a.value == b.value);
    CHECK_FALSE(a.value == c.value);
    const double var = squared_norm(a.value) / static_cast<double>(a.value.numel());
    CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.03));
    CHECK(s2.parameter_count() == 2 * 64 * 64 * 9);
}
