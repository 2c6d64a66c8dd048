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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"
#include "nn/layers.hpp"

namespace msia::model {

using nn::Tensor;

enum class BackboneProfile { toy, full };

/// Ablation ladder: baseline → +IniST → +IniST+SedST → full (adds adaptive assembly).
enum class AblationVariant { baseline, inist, inist_sedst, full };

std::string to_string(BackboneProfile profile);
std::string to_string(AblationVariant variant);
BackboneProfile parse_profile(const std::string& text);
AblationVariant parse_variant(const std::string& text);
/// The four variants in ablation-table order.
const std::array<AblationVariant, 4>& all_variants();

struct ModelConfig {
    BackboneProfile profile = BackboneProfile::toy;
    AblationVariant variant = AblationVariant::full;
    std::array<int, 3> aspp_rates{6, 12, 18};
    int aspp_channels = 256;
    int inist_channels = 64;
    int sedst_channels = 256;
    int decoder_channels = 256;
    int fuse_channels = 64;
    double epsilon = 1e-8;

    bool uses_inist() const { return variant != AblationVariant::baseline; }
    bool uses_sedst() const { return variant == AblationVariant::inist_sedst || variant == AblationVariant::full; }
    bool uses_assembly() const { return variant == AblationVariant::full; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Activation tensor plus its output stride relative to the network input.
struct FeatureMap {
    Tensor values;
    int stride = 1;
};

/// Positive scalars (W_aspp, W_sed) and the normalisation
/// W/(W_aspp + W_sed) + ε applied to each of them.
struct AssemblyWeights {
    double raw_aspp = 1.0;
    double raw_sed = 1.0;
    double epsilon = 1e-8;

    std::pair<double, double> normalized() const;
};

/// Normalised pair for raw weights (a, b). When a + b == 0 the fraction is
/// taken as 1/2 each, so the result is always finite.
std::pair<double, double> normalize_assembly(double raw_aspp, double raw_sed, double epsilon);

/// conv → [batch norm] → [ReLU]
class ConvBlock {
public:
    ConvBlock(nn::ParameterStore& store, const std::string& name, nn::ConvSpec spec, bool batch_norm, bool relu);

    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);
    nn::Conv2d& conv() { return conv_; }

private:
    nn::Conv2d conv_;
    std::optional<nn::BatchNorm2d> bn_;
    std::optional<nn::Relu> relu_;
};

/// ResNeXt bottleneck: 1×1 reduce, grouped 3×3, 1×1 expand, residual add.
class Bottleneck {
public:
    Bottleneck(nn::ParameterStore& store, const std::string& name, int in, int mid, int out, int stride, int dilation,
               int groups);

    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);

private:
    ConvBlock reduce_;
    ConvBlock grouped_;
    ConvBlock expand_;
    std::optional<ConvBlock> shortcut_;
    nn::Relu out_relu_;
};

struct BackboneFeatures {
    FeatureMap block1;  // stride 4
    FeatureMap deep;    // stride 16
};

/// Residual encoder with grouped convolutions. Taps the first stage
/// (stride 4) and the last stage (stride 16; the final stage is dilated
/// instead of strided).
class Backbone {
public:
    Backbone(nn::ParameterStore& store, BackboneProfile profile);

    /// images: N×3×H×W with H and W divisible by 32.
    BackboneFeatures forward(const Tensor& images, bool train);
    Tensor backward(const Tensor& d_block1, const Tensor& d_deep);

    int block1_channels() const { return block1_channels_; }
    int deep_channels() const { return deep_channels_; }

private:
    std::vector<ConvBlock> stem_;
    std::optional<nn::MaxPool2d> stem_pool_;
    std::vector<std::vector<Bottleneck>> stages_;
    int block1_channels_ = 0;
    int deep_channels_ = 0;
};

/// Atrous spatial pyramid pooling: 1×1 branch, three dilated 3×3 branches,
/// image-level pooling branch, 1×1 projection.
class Aspp {
public:
    Aspp(nn::ParameterStore& store, int in_channels, std::array<int, 3> rates, int out_channels);

    FeatureMap forward(const FeatureMap& deep, bool train);
    Tensor backward(const Tensor& dy);
    int out_channels() const { return out_channels_; }

private:
    std::vector<ConvBlock> branches_;
    ConvBlock pool_conv_;
    ConvBlock project_;
    int out_channels_;
    int in_h_ = 0, in_w_ = 0;
};

/// IniST: two 3×3 conv layers at stride 4, 64 channels.
class InitialTraces {
public:
    InitialTraces(nn::ParameterStore& store, int in_channels, int channels);
    FeatureMap forward(const FeatureMap& block1, bool train);
    Tensor backward(const Tensor& dy);
    int out_channels() const { return channels_; }

private:
    ConvBlock conv1_;
    ConvBlock conv2_;
    int channels_;
};

/// SedST: strided 3×3 conv to stride 8 then three 3×3 convs, 256 channels.
class SecondaryTraces {
public:
    SecondaryTraces(nn::ParameterStore& store, int in_channels, int channels);
    FeatureMap forward(const FeatureMap& f_ini, bool train);
    Tensor backward(const Tensor& dy);
    int out_channels() const { return channels_; }

private:
    int in_channels_;
    int channels_;
    std::vector<ConvBlock> convs_;
};

/// Adaptive assembly: Cat(norm_aspp · F_aspp, norm_sed · F_sed). The raw
/// weights are softplus images of two learnable logits.
class InformationAssembly {
public:
    InformationAssembly(nn::ParameterStore& store, double epsilon);

    FeatureMap forward(const FeatureMap& aspp, const FeatureMap& sed, bool train);
    std::pair<Tensor, Tensor> backward(const Tensor& dy);

    AssemblyWeights weights() const;
    /// Sets the logits so that the raw weights equal (raw_aspp, raw_sed); both must be > 0.
    void set_raw_weights(double raw_aspp, double raw_sed);

    /// softplus(θ) with θ chosen so that softplus(θ) = 1.
    static double initial_logit();

private:
    nn::Parameter* aspp_logit_;
    nn::Parameter* sed_logit_;
    double epsilon_;
    Tensor aspp_cache_;
    Tensor sed_cache_;
};

/// Two 3×3 convs on F_IA, ×2 upsample, concat with F_ini, two 3×3 convs
/// down to one channel, sigmoid, ×4 upsample to input resolution.
class AlphaDecoder {
public:
    AlphaDecoder(nn::ParameterStore& store, int ia_channels, int ini_channels, int decoder_channels,
                 int fuse_channels);

    /// Returns N×1×out_h×out_w alpha in (0,1).
    Tensor forward(const FeatureMap& f_ia, const FeatureMap& f_ini, int out_h, int out_w, bool train);
    /// Returns (d f_ia, d f_ini).
    std::pair<Tensor, Tensor> backward(const Tensor& d_alpha);

    ConvBlock& logits_conv() { return fuse2_; }

private:
    ConvBlock ia1_, ia2_, fuse1_, fuse2_;
    nn::Sigmoid sigmoid_;
    int ia_h_ = 0, ia_w_ = 0, ia1_channels_ = 0, ini_channels_;
    int logit_h_ = 0, logit_w_ = 0;
};

/// Baseline head: Cat(block1, ×4-upsampled ASPP) → two 3×3 convs → sigmoid → ×4.
class BaselineDecoder {
public:
    BaselineDecoder(nn::ParameterStore& store, int block1_channels, int aspp_channels, int fuse_channels);

    Tensor forward(const FeatureMap& block1, const FeatureMap& aspp, int out_h, int out_w, bool train);
    /// Returns (d block1, d aspp).
    std::pair<Tensor, Tensor> backward(const Tensor& d_alpha);

private:
    ConvBlock fuse1_, fuse2_;
    nn::Sigmoid sigmoid_;
    int block1_channels_;
    int aspp_h_ = 0, aspp_w_ = 0, logit_h_ = 0, logit_w_ = 0;
};

struct TraceEntry {
    std::string name;
    nn::Shape4 shape;
    int stride;
};
using ForwardTrace = std::vector<TraceEntry>;

class MattingNet {
public:
    MattingNet(const ModelConfig& config, std::uint64_t init_seed);

    /// images: N×3×H×W in [0,1], H and W divisible by 32. Returns N×1×H×W.
    /// With `train` set, caches activations for backward() and uses batch statistics.
    Tensor forward(const Tensor& images, bool train, ForwardTrace* trace = nullptr);
    void backward(const Tensor& d_alpha);

    /// Inference at any resolution: mirror-pads to a multiple of 32, runs in
    /// eval mode, crops back.
    AlphaMatte predict(const ImageRGB& image);

    const ModelConfig& config() const { return config_; }
    std::uint64_t init_seed() const { return init_seed_; }
    nn::ParameterStore& store() { return store_; }
    const nn::ParameterStore& store() const { return store_; }
    std::size_t parameter_count() const { return store_.parameter_count(); }

    Backbone& backbone() { return *backbone_; }
    Aspp& aspp() { return *aspp_; }
    InitialTraces* initial_traces() { return inist_.get(); }
    SecondaryTraces* secondary_traces() { return sedst_.get(); }
    InformationAssembly* assembly() { return assembly_.get(); }
    AlphaDecoder* decoder() { return decoder_.get(); }
    BaselineDecoder* baseline_decoder() { return baseline_decoder_.get(); }

private:
    void initialise(std::uint64_t seed);

    ModelConfig config_;
    std::uint64_t init_seed_;
    nn::ParameterStore store_;
    std::unique_ptr<Backbone> backbone_;
    std::unique_ptr<Aspp> aspp_;
    std::unique_ptr<InitialTraces> inist_;
    std::unique_ptr<SecondaryTraces> sedst_;
    std::unique_ptr<InformationAssembly> assembly_;
    std::unique_ptr<AlphaDecoder> decoder_;
    std::unique_ptr<BaselineDecoder> baseline_decoder_;

    // Shapes cached by a training forward.
    int ini_h_ = 0, ini_w_ = 0, aspp_h_ = 0, aspp_w_ = 0, aspp_c_ = 0;
    bool has_cache_ = false;
};

Tensor images_to_tensor(std::span<const ImageRGB> images);
AlphaMatte tensor_to_matte(const Tensor& t, int n);
Tensor mattes_to_tensor(std::span<const AlphaMatte> mattes);

/// Output stride: input extent divided by feature extent.
int stride_of(int input_extent, int feature_extent);

}  // namespace msia::model
