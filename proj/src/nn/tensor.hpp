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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace msia::nn {

/// NCHW extents.
struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::string str() const;

    friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense float32 NCHW tensor with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape4 shape, float fill = 0.0f);

    const Shape4& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& storage() { return data_; }
    const std::vector<float>& storage() const { return data_; }

    float* plane(int n, int c) { return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane(); }
    const float* plane(int n, int c) const {
        return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
    }
    float& at(int n, int c, int y, int x) { return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x]; }
    float at(int n, int c, int y, int x) const { return plane(n, c)[static_cast<std::size_t>(y) * shape_.w + x]; }

    void fill(float v);
    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape4 shape_;
    std::vector<float> data_;
};

void require_shape(const Tensor& t, const Shape4& expected, const char* what);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Inverse of concat_channels on a gradient: first `channels` channels, rest.
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int channels);

/// Bilinear resampling, half-pixel centers (align-corners off), source
/// coordinates clamped at 0 on the low side.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& dy, int in_h, int in_w);

/// Spatial mean per (n, c): result is N×C×1×1.
Tensor global_average_pool(const Tensor& x);
Tensor global_average_pool_backward(const Tensor& dy, int in_h, int in_w);

void add_inplace(Tensor& a, const Tensor& b);
void scale_inplace(Tensor& a, float s);
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& t);

/// ceil(extent / stride); the spatial size of a stride-`stride` feature map.
inline int strided_extent(int extent, int stride) { return (extent + stride - 1) / stride; }

}  // namespace msia::nn
