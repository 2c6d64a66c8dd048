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
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "model/matting_net.hpp"

namespace msia::model {

/// Everything stored next to the network weights.
struct CheckpointMeta {
    int epoch = 0;
    std::int64_t iteration = 0;
    /// Training configuration the checkpoint came from (free-form, may be empty).
    nlohmann::json training = nlohmann::json::object();
    /// Optimiser momentum buffers keyed by parameter name.
    std::vector<std::pair<std::string, nn::Tensor>> optimizer_state;
};

struct LoadedCheckpoint {
    std::unique_ptr<MattingNet> net;
    CheckpointMeta meta;
};

/// Layout: "MSIACKPT", u32 version, u64 header length, JSON header (model
/// config, init seed, epoch, tensor index), u64 payload length, raw
/// little-endian float32 payload, u32 CRC-32 of header and payload.
void save_checkpoint(const std::filesystem::path& path, const MattingNet& net, const CheckpointMeta& meta);

/// Throws CheckpointError on a bad magic, version, CRC, or tensor table.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Reads and validates only the header; cheap way to audit the variant.
ModelConfig read_checkpoint_config(const std::filesystem::path& path);

}  // namespace msia::model
