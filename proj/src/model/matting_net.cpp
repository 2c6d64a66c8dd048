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

#include "model/matting_net.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::model {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void require_stride(const FeatureMap& f, int stride, const char* what) {
    if (f.stride != stride)
        throw ShapeError(fmt::format("{}: expected a stride-{} feature map, got stride {}", what, stride, f.stride));
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ProfileSpec {
    std::array<int, 4> widths;
    std::array<int, 4> blocks;
    std::array<int, 4> mids;
    int groups;
};

ProfileSpec profile_spec(BackboneProfile p) {
    if (p == BackboneProfile::toy) return {{64, 128, 256, 512}, {1, 1, 1, 1}, {32, 64, 128, 256}, 8};
    // ResNeXt-101 (32×8d).
    return {{256, 512, 1024, 2048}, {3, 4, 23, 3}, {256, 512, 1024, 2048}, 32};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

std::string to_string(BackboneProfile profile) { return profile == BackboneProfile::toy ? "toy" : "full"; }

std::string to_string(AblationVariant variant) {
    switch (variant) {
        case AblationVariant::baseline: return "baseline";
        case AblationVariant::inist: return "inist";
        case AblationVariant::inist_sedst: return "inist_sedst";
        case AblationVariant::full: return "full";
    }
    return "unknown";
}

BackboneProfile parse_profile(const std::string& text) {
    if (text == "toy") return BackboneProfile::toy;
    if (text == "full") return BackboneProfile::full;
    throw ConfigError(fmt::format("unknown backbone profile '{}' (expected toy|full)", text));
}

AblationVariant parse_variant(const std::string& text) {
    for (auto v : all_variants())
        if (to_string(v) == text) return v;
    throw ConfigError(fmt::format("unknown ablation variant '{}' (expected baseline|inist|inist_sedst|full)", text));
}

const std::array<AblationVariant, 4>& all_variants() {
    static const std::array<AblationVariant, 4> kAll = {AblationVariant::baseline, AblationVariant::inist,
                                                       AblationVariant::inist_sedst, AblationVariant::full};
    return kAll;
}

nlohmann::json to_json(const ModelConfig& c) {
    return {{"profile", to_string(c.profile)},
            {"variant", to_string(c.variant)},
            {"aspp_rates", c.aspp_rates},
            {"aspp_channels", c.aspp_channels},
            {"inist_channels", c.inist_channels},
            {"sedst_channels", c.sedst_channels},
            {"decoder_channels", c.decoder_channels},
            {"fuse_channels", c.fuse_channels},
            {"epsilon", c.epsilon}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    try {
        ModelConfig c;
        c.profile = parse_profile(j.at("profile").get<std::string>());
        c.variant = parse_variant(j.at("variant").get<std::string>());
        c.aspp_rates = j.at("aspp_rates").get<std::array<int, 3>>();
        c.aspp_channels = j.at("aspp_channels").get<int>();
        c.inist_channels = j.at("inist_channels").get<int>();
        c.sedst_channels = j.at("sedst_channels").get<int>();
        c.decoder_channels = j.at("decoder_channels").get<int>();
        c.fuse_channels = j.at("fuse_channels").get<int>();
        c.epsilon = j.at("epsilon").get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("malformed model config: {}", e.what()));
    }
}

std::pair<double, double> normalize_assembly(double raw_aspp, double raw_sed, double epsilon) {
    if (raw_aspp < 0.0 || raw_sed < 0.0 || !std::isfinite(raw_aspp) || !std::isfinite(raw_sed))
        throw ConfigError(fmt::format("assembly weights must be finite and non-negative, got ({}, {})", raw_aspp, raw_sed));
    const double sum = raw_aspp + raw_sed;
    if (sum <= 0.0) return {0.5 + epsilon, 0.5 + epsilon};
    return {raw_aspp / sum + epsilon, raw_sed / sum + epsilon};
}

std::pair<double, double> AssemblyWeights::normalized() const { return normalize_assembly(raw_aspp, raw_sed, epsilon); }

int stride_of(int input_extent, int feature_extent) {
    if (feature_extent <= 0 || input_extent % feature_extent != 0) return -1;
    return input_extent / feature_extent;
}

// ---------------------------------------------------------------------------
// ConvBlock / Bottleneck

ConvBlock::ConvBlock(nn::ParameterStore& store, const std::string& name, nn::ConvSpec spec, bool batch_norm, bool relu)
    : conv_(store, name + ".conv", spec) {
    if (batch_norm) bn_.emplace(store, name + ".bn", spec.out);
    if (relu) relu_.emplace();
}

Tensor ConvBlock::forward(const Tensor& x, bool train) {
    Tensor y = conv_.forward(x, train);
    if (bn_) y = bn_->forward(y, train);
    if (relu_) y = relu_->forward(y, train);
    return y;
}

Tensor ConvBlock::backward(const Tensor& dy) {
    Tensor d = relu_ ? relu_->backward(dy) : dy;
    if (bn_) d = bn_->backward(d);
    return conv_.backward(d);
}

Bottleneck::Bottleneck(nn::ParameterStore& store, const std::string& name, int in, int mid, int out, int stride,
                       int dilation, int groups)
    : reduce_(store, name + ".reduce", {.in = in, .out = mid, .kernel = 1}, true, true),
      grouped_(store, name + ".grouped",
               {.in = mid, .out = mid, .kernel = 3, .stride = stride, .dilation = dilation, .groups = groups}, true,
               true),
      expand_(store, name + ".expand", {.in = mid, .out = out, .kernel = 1}, true, false) {
    if (in != out || stride != 1)
        shortcut_.emplace(store, name + ".shortcut", nn::ConvSpec{.in = in, .out = out, .kernel = 1, .stride = stride},
                          true, false);
}

Tensor Bottleneck::forward(const Tensor& x, bool train) {
    Tensor y = expand_.forward(grouped_.forward(reduce_.forward(x, train), train), train);
    if (shortcut_)
        nn::add_inplace(y, shortcut_->forward(x, train));
    else
        nn::add_inplace(y, x);
    return out_relu_.forward(y, train);
}

Tensor Bottleneck::backward(const Tensor& dy) {
    Tensor d = out_relu_.backward(dy);
    Tensor dx = reduce_.backward(grouped_.backward(expand_.backward(d)));
    nn::add_inplace(dx, shortcut_ ? shortcut_->backward(d) : d);
    return dx;
}

// ---------------------------------------------------------------------------
// Backbone

Backbone::Backbone(nn::ParameterStore& store, BackboneProfile profile) {
    const ProfileSpec spec = profile_spec(profile);
    int channels;
    if (profile == BackboneProfile::toy) {
        stem_.emplace_back(store, "backbone.stem1", nn::ConvSpec{.in = 3, .out = 32, .kernel = 3, .stride = 2}, true, true);
        stem_.emplace_back(store, "backbone.stem2", nn::ConvSpec{.in = 32, .out = 64, .kernel = 3, .stride = 2}, true, true);
        channels = 64;
    } else {
        stem_.emplace_back(store, "backbone.stem1", nn::ConvSpec{.in = 3, .out = 64, .kernel = 7, .stride = 2}, true, true);
        stem_pool_.emplace();
        channels = 64;
    }
    constexpr std::array<int, 4> kStrides = {1, 2, 2, 1};
    constexpr std::array<int, 4> kDilations = {1, 1, 1, 2};
    stages_.resize(4);
    for (int s = 0; s < 4; ++s) {
        for (int b = 0; b < spec.blocks[s]; ++b) {
            stages_[s].emplace_back(store, fmt::format("backbone.stage{}.block{}", s + 1, b), channels, spec.mids[s],
                                    spec.widths[s], b == 0 ? kStrides[s] : 1, kDilations[s], spec.groups);
            channels = spec.widths[s];
        }
    }
    block1_channels_ = spec.widths[0];
    deep_channels_ = spec.widths[3];
}

BackboneFeatures Backbone::forward(const Tensor& images, bool train) {
    if (images.c() != 3) throw ShapeError(fmt::format("backbone expects 3 input channels, got {}", images.c()));
    if (images.h() % 32 != 0 || images.w() % 32 != 0)
        throw ShapeError(fmt::format("input {}x{} is not divisible by 32; pad or resize first", images.h(), images.w()));
    Tensor x = images;
    for (auto& s : stem_) x = s.forward(x, train);
    if (stem_pool_) x = stem_pool_->forward(x, train);
    for (auto& b : stages_[0]) x = b.forward(x, train);
    BackboneFeatures out;
    out.block1 = {x, 4};
    for (int s = 1; s < 4; ++s)
        for (auto& b : stages_[s]) x = b.forward(x, train);
    out.deep = {std::move(x), 16};
    return out;
}

Tensor Backbone::backward(const Tensor& d_block1, const Tensor& d_deep) {
    Tensor d = d_deep;
    for (int s = 3; s >= 1; --s)
        for (auto it = stages_[s].rbegin(); it != stages_[s].rend(); ++it) d = it->backward(d);
    nn::add_inplace(d, d_block1);
    for (auto it = stages_[0].rbegin(); it != stages_[0].rend(); ++it) d = it->backward(d);
    if (stem_pool_) d = stem_pool_->backward(d);
    for (auto it = stem_.rbegin(); it != stem_.rend(); ++it) d = it->backward(d);
    return d;
}

// ---------------------------------------------------------------------------
// ASPP

Aspp::Aspp(nn::ParameterStore& store, int in_channels, std::array<int, 3> rates, int out_channels)
    : pool_conv_(store, "aspp.pool", {.in = in_channels, .out = out_channels, .kernel = 1}, true, true),
      project_(store, "aspp.project", {.in = 5 * out_channels, .out = out_channels, .kernel = 1}, true, true),
      out_channels_(out_channels) {
    branches_.emplace_back(store, "aspp.branch0", nn::ConvSpec{.in = in_channels, .out = out_channels, .kernel = 1},
                           true, true);
    for (int i = 0; i < 3; ++i)
        branches_.emplace_back(store, fmt::format("aspp.branch{}", i + 1),
                               nn::ConvSpec{.in = in_channels, .out = out_channels, .kernel = 3, .dilation = rates[i]},
                               true, true);
}

FeatureMap Aspp::forward(const FeatureMap& deep, bool train) {
    require_stride(deep, 16, "aspp");
    const Tensor& x = deep.values;
    in_h_ = x.h();
    in_w_ = x.w();
    Tensor cat = branches_[0].forward(x, train);
    for (std::size_t i = 1; i < branches_.size(); ++i) cat = nn::concat_channels(cat, branches_[i].forward(x, train));
    Tensor pooled = pool_conv_.forward(nn::global_average_pool(x), train);
    cat = nn::concat_channels(cat, nn::bilinear_resize(pooled, x.h(), x.w()));
    return {project_.forward(cat, train), 16};
}

Tensor Aspp::backward(const Tensor& dy) {
    Tensor d_cat = project_.backward(dy);
    auto [d_branches, d_pool] = nn::split_channels(d_cat, 4 * out_channels_);
    Tensor d_pooled = nn::bilinear_resize_backward(d_pool, 1, 1);
    Tensor dx = nn::global_average_pool_backward(pool_conv_.backward(d_pooled), in_h_, in_w_);
    Tensor rest = std::move(d_branches);
    for (int i = 3; i >= 0; --i) {
        auto [head, tail] = nn::split_channels(rest, i * out_channels_);
        nn::add_inplace(dx, branches_[i].backward(tail));
        rest = std::move(head);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Superficial traces

InitialTraces::InitialTraces(nn::ParameterStore& store, int in_channels, int channels)
    : conv1_(store, "inist.conv1", {.in = in_channels, .out = channels, .kernel = 3}, true, true),
      conv2_(store, "inist.conv2", {.in = channels, .out = channels, .kernel = 3}, true, true),
      channels_(channels) {}

FeatureMap InitialTraces::forward(const FeatureMap& block1, bool train) {
    require_stride(block1, 4, "inist");
    return {conv2_.forward(conv1_.forward(block1.values, train), train), 4};
}

Tensor InitialTraces::backward(const Tensor& dy) { return conv1_.backward(conv2_.backward(dy)); }

SecondaryTraces::SecondaryTraces(nn::ParameterStore& store, int in_channels, int channels)
    : in_channels_(in_channels), channels_(channels) {
    convs_.emplace_back(store, "sedst.down", nn::ConvSpec{.in = in_channels, .out = channels, .kernel = 3, .stride = 2},
                        true, true);
    for (int i = 1; i <= 3; ++i)
        convs_.emplace_back(store, fmt::format("sedst.conv{}", i),
                            nn::ConvSpec{.in = channels, .out = channels, .kernel = 3}, true, true);
}

FeatureMap SecondaryTraces::forward(const FeatureMap& f_ini, bool train) {
    require_stride(f_ini, 4, "sedst");
    if (f_ini.values.c() != in_channels_)
        throw ShapeError(fmt::format("sedst expects {} input channels, got {}", in_channels_, f_ini.values.c()));
    Tensor x = f_ini.values;
    for (auto& c : convs_) x = c.forward(x, train);
    return {std::move(x), 8};
}

Tensor SecondaryTraces::backward(const Tensor& dy) {
    Tensor d = dy;
    for (auto it = convs_.rbegin(); it != convs_.rend(); ++it) d = it->backward(d);
    return d;
}

// ---------------------------------------------------------------------------
// Information assembly

InformationAssembly::InformationAssembly(nn::ParameterStore& store, double epsilon)
    : aspp_logit_(&store.add_parameter("assembly.aspp_logit", {1, 1, 1, 1}, false)),
      sed_logit_(&store.add_parameter("assembly.sed_logit", {1, 1, 1, 1}, false)),
      epsilon_(epsilon) {
    aspp_logit_->value.fill(static_cast<float>(initial_logit()));
    sed_logit_->value.fill(static_cast<float>(initial_logit()));
}

double InformationAssembly::initial_logit() { return std::log(std::expm1(1.0)); }

AssemblyWeights InformationAssembly::weights() const {
    return {softplus(aspp_logit_->value.data()[0]), softplus(sed_logit_->value.data()[0]), epsilon_};
}

void InformationAssembly::set_raw_weights(double raw_aspp, double raw_sed) {
    if (!(raw_aspp > 0.0) || !(raw_sed > 0.0)) throw ConfigError("raw assembly weights must be positive");
    auto inverse_softplus = [](double y) { return y > 30.0 ? y : std::log(std::expm1(y)); };
    aspp_logit_->value.fill(static_cast<float>(inverse_softplus(raw_aspp)));
    sed_logit_->value.fill(static_cast<float>(inverse_softplus(raw_sed)));
}

FeatureMap InformationAssembly::forward(const FeatureMap& aspp, const FeatureMap& sed, bool train) {
    require_stride(aspp, 8, "assembly (aspp input)");
    require_stride(sed, 8, "assembly (sed input)");
    const Tensor& a = aspp.values;
    const Tensor& s = sed.values;
    if (a.n() != s.n() || a.h() != s.h() || a.w() != s.w())
        throw ShapeError(fmt::format("assembly: spatial mismatch {} vs {}", a.shape().str(), s.shape().str()));
    const auto [na, ns] = weights().normalized();
    Tensor sa = a, ss = s;
    nn::scale_inplace(sa, static_cast<float>(na));
    nn::scale_inplace(ss, static_cast<float>(ns));
    if (train) {
        aspp_cache_ = a;
        sed_cache_ = s;
    }
    return {nn::concat_channels(sa, ss), 8};
}

std::pair<Tensor, Tensor> InformationAssembly::backward(const Tensor& dy) {
    if (aspp_cache_.empty()) throw Error("assembly: backward without cached forward");
    auto [da, ds] = nn::split_channels(dy, aspp_cache_.c());
    const AssemblyWeights w = weights();
    const auto [na, ns] = w.normalized();
    const double g_na = nn::dot(da, aspp_cache_);
    const double g_ns = nn::dot(ds, sed_cache_);
    const double sum = w.raw_aspp + w.raw_sed;
    const double inv2 = 1.0 / (sum * sum);
    // ∂na/∂a = b/s², ∂na/∂b = −a/s², ∂ns/∂a = −b/s², ∂ns/∂b = a/s².
    const double g_a = (g_na - g_ns) * w.raw_sed * inv2;
    const double g_b = (g_ns - g_na) * w.raw_aspp * inv2;
    aspp_logit_->grad.data()[0] += static_cast<float>(g_a * logistic(aspp_logit_->value.data()[0]));
    sed_logit_->grad.data()[0] += static_cast<float>(g_b * logistic(sed_logit_->value.data()[0]));
    nn::scale_inplace(da, static_cast<float>(na));
    nn::scale_inplace(ds, static_cast<float>(ns));
    aspp_cache_ = Tensor();
    sed_cache_ = Tensor();
    return {std::move(da), std::move(ds)};
}

// ---------------------------------------------------------------------------
// Decoders

AlphaDecoder::AlphaDecoder(nn::ParameterStore& store, int ia_channels, int ini_channels, int decoder_channels,
                           int fuse_channels)
    : ia1_(store, "decoder.ia1", {.in = ia_channels, .out = decoder_channels, .kernel = 3, .bias = true}, false, true),
      ia2_(store, "decoder.ia2", {.in = decoder_channels, .out = decoder_channels, .kernel = 3, .bias = true}, false,
           true),
      fuse1_(store, "decoder.fuse1",
             {.in = decoder_channels + ini_channels, .out = fuse_channels, .kernel = 3, .bias = true}, false, true),
      fuse2_(store, "decoder.fuse2", {.in = fuse_channels, .out = 1, .kernel = 3, .bias = true}, false, false),
      ini_channels_(ini_channels) {}

Tensor AlphaDecoder::forward(const FeatureMap& f_ia, const FeatureMap& f_ini, int out_h, int out_w, bool train) {
    require_stride(f_ia, 8, "decoder (F_IA)");
    require_stride(f_ini, 4, "decoder (F_ini)");
    if (f_ini.values.c() != ini_channels_)
        throw ShapeError(fmt::format("decoder expects {} F_ini channels, got {}", ini_channels_, f_ini.values.c()));
    if (f_ia.values.n() != f_ini.values.n() || nn::strided_extent(f_ini.values.h(), 2) != f_ia.values.h() ||
        nn::strided_extent(f_ini.values.w(), 2) != f_ia.values.w())
        throw ShapeError(fmt::format("decoder: F_IA {} does not pair with F_ini {}", f_ia.values.shape().str(),
                                     f_ini.values.shape().str()));
    ia_h_ = f_ia.values.h();
    ia_w_ = f_ia.values.w();
    Tensor x = ia2_.forward(ia1_.forward(f_ia.values, train), train);
    ia1_channels_ = x.c();
    x = nn::bilinear_resize(x, f_ini.values.h(), f_ini.values.w());
    Tensor cat = nn::concat_channels(x, f_ini.values);  // F_cat
    Tensor logits = fuse2_.forward(fuse1_.forward(cat, train), train);
    logit_h_ = logits.h();
    logit_w_ = logits.w();
    return nn::bilinear_resize(sigmoid_.forward(logits, train), out_h, out_w);
}

std::pair<Tensor, Tensor> AlphaDecoder::backward(const Tensor& d_alpha) {
    Tensor d = sigmoid_.backward(nn::bilinear_resize_backward(d_alpha, logit_h_, logit_w_));
    Tensor d_cat = fuse1_.backward(fuse2_.backward(d));
    auto [d_up, d_ini] = nn::split_channels(d_cat, ia1_channels_);
    Tensor d_ia = ia1_.backward(ia2_.backward(nn::bilinear_resize_backward(d_up, ia_h_, ia_w_)));
    return {std::move(d_ia), std::move(d_ini)};
}

BaselineDecoder::BaselineDecoder(nn::ParameterStore& store, int block1_channels, int aspp_channels, int fuse_channels)
    : fuse1_(store, "decoder.fuse1",
             {.in = block1_channels + aspp_channels, .out = fuse_channels, .kernel = 3, .bias = true}, false, true),
      fuse2_(store, "decoder.fuse2", {.in = fuse_channels, .out = 1, .kernel = 3, .bias = true}, false, false),
      block1_channels_(block1_channels) {}

Tensor BaselineDecoder::forward(const FeatureMap& block1, const FeatureMap& aspp, int out_h, int out_w, bool train) {
    require_stride(block1, 4, "baseline decoder (block1)");
    require_stride(aspp, 16, "baseline decoder (aspp)");
    aspp_h_ = aspp.values.h();
    aspp_w_ = aspp.values.w();
    Tensor up = nn::bilinear_resize(aspp.values, block1.values.h(), block1.values.w());
    Tensor logits = fuse2_.forward(fuse1_.forward(nn::concat_channels(block1.values, up), train), train);
    logit_h_ = logits.h();
    logit_w_ = logits.w();
    return nn::bilinear_resize(sigmoid_.forward(logits, train), out_h, out_w);
}

std::pair<Tensor, Tensor> BaselineDecoder::backward(const Tensor& d_alpha) {
    Tensor d = sigmoid_.backward(nn::bilinear_resize_backward(d_alpha, logit_h_, logit_w_));
    Tensor d_cat = fuse1_.backward(fuse2_.backward(d));
    auto [d_block1, d_up] = nn::split_channels(d_cat, block1_channels_);
    return {std::move(d_block1), nn::bilinear_resize_backward(d_up, aspp_h_, aspp_w_)};
}

// ---------------------------------------------------------------------------
// MattingNet

MattingNet::MattingNet(const ModelConfig& config, std::uint64_t init_seed) : config_(config), init_seed_(init_seed) {
    if (!(config.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    for (int r : config.aspp_rates)
        if (r < 1) throw ConfigError(fmt::format("ASPP rate {} must be >= 1", r));
    backbone_ = std::make_unique<Backbone>(store_, config.profile);
    aspp_ = std::make_unique<Aspp>(store_, backbone_->deep_channels(), config.aspp_rates, config.aspp_channels);
    if (config.variant == AblationVariant::baseline) {
        baseline_decoder_ = std::make_unique<BaselineDecoder>(store_, backbone_->block1_channels(),
                                                              config.aspp_channels, config.fuse_channels);
    } else {
        inist_ = std::make_unique<InitialTraces>(store_, backbone_->block1_channels(), config.inist_channels);
        int sed_channels = config.inist_channels;
        if (config.uses_sedst()) {
            sedst_ = std::make_unique<SecondaryTraces>(store_, config.inist_channels, config.sedst_channels);
            sed_channels = config.sedst_channels;
        }
        if (config.uses_assembly()) assembly_ = std::make_unique<InformationAssembly>(store_, config.epsilon);
        decoder_ = std::make_unique<AlphaDecoder>(store_, config.aspp_channels + sed_channels, config.inist_channels,
                                                  config.decoder_channels, config.fuse_channels);
    }
    initialise(init_seed);
}

void MattingNet::initialise(std::uint64_t seed) {
    for (const auto& p : store_.parameters()) {
        const std::string& name = p->name;
        if (ends_with(name, ".bn.weight")) {
            nn::init_constant(*p, 1.0f);
        } else if (ends_with(name, ".bn.bias") || ends_with(name, ".conv.bias")) {
            nn::init_constant(*p, 0.0f);
        } else if (ends_with(name, "_logit")) {
            nn::init_constant(*p, static_cast<float>(InformationAssembly::initial_logit()));
        } else if (name.rfind("backbone.", 0) == 0) {
            const auto& s = p->value.shape();
            nn::init_gaussian(*p, std::sqrt(2.0 / (static_cast<double>(s.c) * s.h * s.w)), seed);
        } else {
            nn::init_gaussian(*p, 0.01, seed);
        }
    }
}

Tensor MattingNet::forward(const Tensor& images, bool train, ForwardTrace* trace) {
    if (images.n() < 1 || images.c() != 3)
        throw ShapeError(fmt::format("expected N×3×H×W input, got {}", images.shape().str()));
    const int H = images.h(), W = images.w();
    if (H % 32 != 0 || W % 32 != 0)
        throw ShapeError(fmt::format("input {}x{} is not divisible by 32; pad or resize first", H, W));
    auto record = [&](const char* name, const Tensor& t) {
        if (trace) trace->push_back({name, t.shape(), stride_of(H, t.h()) == stride_of(W, t.w()) ? stride_of(H, t.h()) : -1});
    };

    BackboneFeatures bf = backbone_->forward(images, train);
    record("block1", bf.block1.values);
    record("deep", bf.deep.values);
    FeatureMap f_aspp = aspp_->forward(bf.deep, train);
    record("aspp", f_aspp.values);
    aspp_h_ = f_aspp.values.h();
    aspp_w_ = f_aspp.values.w();
    aspp_c_ = f_aspp.values.c();

    Tensor alpha;
    if (baseline_decoder_) {
        alpha = baseline_decoder_->forward(bf.block1, f_aspp, H, W, train);
    } else {
        FeatureMap f_ini = inist_->forward(bf.block1, train);
        record("ini", f_ini.values);
        ini_h_ = f_ini.values.h();
        ini_w_ = f_ini.values.w();
        FeatureMap f_sed;
        if (sedst_) {
            f_sed = sedst_->forward(f_ini, train);
        } else {
            f_sed = {nn::bilinear_resize(f_ini.values, nn::strided_extent(ini_h_, 2), nn::strided_extent(ini_w_, 2)), 8};
        }
        record("sed", f_sed.values);
        FeatureMap aspp_up{nn::bilinear_resize(f_aspp.values, f_sed.values.h(), f_sed.values.w()), 8};
        FeatureMap f_ia = assembly_ ? assembly_->forward(aspp_up, f_sed, train)
                                    : FeatureMap{nn::concat_channels(aspp_up.values, f_sed.values), 8};
        record("ia", f_ia.values);
        alpha = decoder_->forward(f_ia, f_ini, H, W, train);
    }
    record("alpha", alpha);
    has_cache_ = train;
    return alpha;
}

void MattingNet::backward(const Tensor& d_alpha) {
    if (!has_cache_) throw Error("backward() requires a preceding training forward()");
    has_cache_ = false;
    if (baseline_decoder_) {
        auto [d_block1, d_aspp] = baseline_decoder_->backward(d_alpha);
        Tensor d_deep = aspp_->backward(d_aspp);
        backbone_->backward(d_block1, d_deep);
        return;
    }
    auto [d_ia, d_ini] = decoder_->backward(d_alpha);
    Tensor d_aspp_up, d_sed;
    if (assembly_) {
        std::tie(d_aspp_up, d_sed) = assembly_->backward(d_ia);
    } else {
        std::tie(d_aspp_up, d_sed) = nn::split_channels(d_ia, aspp_c_);
    }
    Tensor d_aspp = nn::bilinear_resize_backward(d_aspp_up, aspp_h_, aspp_w_);
    if (sedst_)
        nn::add_inplace(d_ini, sedst_->backward(d_sed));
    else
        nn::add_inplace(d_ini, nn::bilinear_resize_backward(d_sed, ini_h_, ini_w_));
    Tensor d_block1 = inist_->backward(d_ini);
    Tensor d_deep = aspp_->backward(d_aspp);
    backbone_->backward(d_block1, d_deep);
}

AlphaMatte MattingNet::predict(const ImageRGB& image) {
    const int H = image.height(), W = image.width();
    const int ph = (H + 31) / 32 * 32, pw = (W + 31) / 32 * 32;
    const ImageRGB padded = pad_reflect(image, ph, pw);
    const Tensor out = forward(images_to_tensor(std::span(&padded, 1)), false);
    return crop(tensor_to_matte(out, 0), 0, 0, H, W);
}

Tensor images_to_tensor(std::span<const ImageRGB> images) {
    if (images.empty()) throw ShapeError("empty image batch");
    const int H = images[0].height(), W = images[0].width();
    Tensor t({static_cast<int>(images.size()), 3, H, W});
    for (std::size_t n = 0; n < images.size(); ++n) {
        require_same_dims(images[0], images[n], "image batch");
        for (int c = 0; c < 3; ++c) {
            float* dst = t.plane(static_cast<int>(n), c);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) dst[static_cast<std::size_t>(y) * W + x] = images[n].at(y, x, c);
        }
    }
    return t;
}

AlphaMatte tensor_to_matte(const Tensor& t, int n) {
    if (t.c() != 1) throw ShapeError(fmt::format("expected a single-channel tensor, got {}", t.shape().str()));
    AlphaMatte m(t.h(), t.w());
    const float* src = t.plane(n, 0);
    std::copy(src, src + m.size(), m.values().begin());
    return m;
}

Tensor mattes_to_tensor(std::span<const AlphaMatte> mattes) {
    if (mattes.empty()) throw ShapeError("empty matte batch");
    Tensor t({static_cast<int>(mattes.size()), 1, mattes[0].height(), mattes[0].width()});
    for (std::size_t n = 0; n < mattes.size(); ++n) {
        require_same_dims(mattes[0], mattes[n], "matte batch");
        std::transform(mattes[n].values().begin(), mattes[n].values().end(), t.plane(static_cast<int>(n), 0),
                       [](double v) { return static_cast<float>(v); });
    }
    return t;
}

}  // namespace msia::model
