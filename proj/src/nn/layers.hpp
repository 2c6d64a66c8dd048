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
#include <memory>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace msia::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    /// Subject to L2 weight decay in the optimiser.
    bool decay = true;
};

struct Buffer {
    std::string name;
    Tensor value;
};

/// Owns every learnable tensor and running statistic of a network. Entries
/// keep stable addresses, so layers hold plain pointers into the store.
class ParameterStore {
public:
    Parameter& add_parameter(std::string name, Shape4 shape, bool decay);
    Buffer& add_buffer(std::string name, Shape4 shape, float fill);

    const std::vector<std::unique_ptr<Parameter>>& parameters() const { return params_; }
    const std::vector<std::unique_ptr<Buffer>>& buffers() const { return buffers_; }
    Parameter* find_parameter(const std::string& name) const;
    Buffer* find_buffer(const std::string& name) const;

    /// Number of learnable scalars.
    std::size_t parameter_count() const;
    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::vector<std::unique_ptr<Buffer>> buffers_;
};

/// Zero-mean Gaussian fill from a stream keyed by (seed, parameter name), so
/// layers that share a name across architectures get identical draws.
void init_gaussian(Parameter& p, double stddev, std::uint64_t seed);
void init_constant(Parameter& p, float value);
std::uint64_t name_hash(const std::string& name);

struct ConvSpec {
    int in = 0;
    int out = 0;
    int kernel = 3;
    int stride = 1;
    int dilation = 1;
    int groups = 1;
    bool bias = false;
    /// Negative means "same" padding: dilation * (kernel / 2).
    int padding = -1;
};

class Conv2d {
public:
    Conv2d(ParameterStore& store, const std::string& name, ConvSpec spec);

    /// `keep` caches the input for a later backward().
    Tensor forward(const Tensor& x, bool keep);
    /// Accumulates weight/bias gradients and returns d(input).
    Tensor backward(const Tensor& dy);

    const ConvSpec& spec() const { return spec_; }
    Parameter& weight() { return *weight_; }
    Parameter* bias() { return bias_; }
    int output_extent(int extent) const;

private:
    void im2col(const float* x, int h, int w, int oh, int ow, float* col) const;
    void col2im(const float* col, int h, int w, int oh, int ow, float* dx) const;

    ConvSpec spec_;
    int pad_ = 0;
    Parameter* weight_ = nullptr;
    Parameter* bias_ = nullptr;
    Tensor input_;
};

/// Batch normalisation over (N, H, W). Training mode uses batch statistics
/// and updates the running estimates; eval mode uses the running estimates.
class BatchNorm2d {
public:
    BatchNorm2d(ParameterStore& store, const std::string& name, int channels);

    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);

    static constexpr float kEps = 1e-5f;
    static constexpr float kMomentum = 0.1f;

private:
    int channels_;
    Parameter* gamma_;
    Parameter* beta_;
    Buffer* running_mean_;
    Buffer* running_var_;
    Tensor xhat_;
    std::vector<float> inv_std_;
    bool cached_train_ = false;
};

class Relu {
public:
    Tensor forward(const Tensor& x, bool keep);
    Tensor backward(const Tensor& dy) const;

private:
    Tensor output_;
};

class Sigmoid {
public:
    Tensor forward(const Tensor& x, bool keep);
    Tensor backward(const Tensor& dy) const;

private:
    Tensor output_;
};

/// 3×3, stride 2, padding 1 max pooling (ResNet stem).
class MaxPool2d {
public:
    Tensor forward(const Tensor& x, bool keep);
    Tensor backward(const Tensor& dy) const;

private:
    Shape4 in_shape_;
    std::vector<std::uint32_t> argmax_;
};

}  // namespace msia::nn
