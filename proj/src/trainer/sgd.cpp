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

#include "trainer/sgd.hpp"

#include <cmath>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::trainer {

double poly_lr(std::int64_t iter, std::int64_t total, double lr0, double power) {
    if (total <= 0) throw ConfigError(fmt::format("poly_lr: total iterations must be positive, got {}", total));
    if (iter < 0 || iter > total)
        throw ConfigError(fmt::format("poly_lr: iteration {} outside [0, {}]", iter, total));
    if (iter == total) return 0.0;
    return lr0 * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(total), power);
}

Sgd::Sgd(nn::ParameterStore& store, double momentum, double weight_decay)
    : store_(store), momentum_(momentum), weight_decay_(weight_decay) {
    for (const auto& p : store_.parameters()) velocity_.emplace_back(p->value.shape());
}

void Sgd::step(double lr) {
    const auto& params = store_.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        nn::Parameter& p = *params[k];
        float* w = p.value.data();
        const float* g = p.grad.data();
        float* v = velocity_[k].data();
        const double wd = p.decay ? weight_decay_ : 0.0;
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            const double grad = static_cast<double>(g[i]) + wd * static_cast<double>(w[i]);
            const double vel = momentum_ * static_cast<double>(v[i]) + grad;
            v[i] = static_cast<float>(vel);
            w[i] = static_cast<float>(static_cast<double>(w[i]) - lr * vel);
        }
    }
}

std::vector<std::pair<std::string, nn::Tensor>> Sgd::state() const {
    std::vector<std::pair<std::string, nn::Tensor>> out;
    const auto& params = store_.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) out.emplace_back(params[k]->name, velocity_[k]);
    return out;
}

void Sgd::load_state(const std::vector<std::pair<std::string, nn::Tensor>>& state) {
    const auto& params = store_.parameters();
    for (const auto& [name, t] : state) {
        bool found = false;
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (params[k]->name != name) continue;
            if (!(t.shape() == velocity_[k].shape()))
                throw CheckpointError(fmt::format("optimiser state for '{}' has the wrong shape", name));
            velocity_[k] = t;
            found = true;
            break;
        }
        if (!found) throw CheckpointError(fmt::format("optimiser state names unknown parameter '{}'", name));
    }
}

}  // namespace msia::trainer
