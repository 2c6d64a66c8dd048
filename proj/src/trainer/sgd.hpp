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
#include <string>
#include <utility>
#include <vector>

#include "nn/layers.hpp"

namespace msia::trainer {

/// lr0 · (1 − iter/total)^power. Throws ConfigError unless 0 ≤ iter ≤ total and total > 0.
double poly_lr(std::int64_t iter, std::int64_t total, double lr0, double power);

/// Momentum SGD with coupled L2 weight decay:
///   g ← ∇ + wd·w (decayed parameters only); v ← μ·v + g; w ← w − lr·v.
class Sgd {
public:
    Sgd(nn::ParameterStore& store, double momentum, double weight_decay);

    void step(double lr);

    /// Momentum buffers keyed by parameter name (for checkpoints).
    std::vector<std::pair<std::string, nn::Tensor>> state() const;
    void load_state(const std::vector<std::pair<std::string, nn::Tensor>>& state);

private:
    nn::ParameterStore& store_;
    double momentum_;
    double weight_decay_;
    std::vector<nn::Tensor> velocity_;
};

}  // namespace msia::trainer
