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

#include "model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/core.h>
#include <zlib.h>

#include "core/errors.hpp"
#include "core/manifest.hpp"

namespace msia::model {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'M', 'S', 'I', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos, const fs::path& path) {
    if (pos + sizeof(T) > in.size()) throw CheckpointError(fmt::format("{}: truncated checkpoint", path.string()));
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

struct Parsed {
    nlohmann::json header;
    std::string payload;
};

Parsed parse(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(fmt::format("cannot open checkpoint {}", path.string()));
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(fmt::format("{}: not a checkpoint (bad magic)", path.string()));
    pos = sizeof(kMagic);
    const auto version = take<std::uint32_t>(bytes, pos, path);
    if (version != kVersion)
        throw CheckpointError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
    const std::size_t body_start = pos;
    const auto header_len = take<std::uint64_t>(bytes, pos, path);
    if (header_len > bytes.size() - pos) throw CheckpointError(fmt::format("{}: truncated header", path.string()));
    std::string header_text = bytes.substr(pos, header_len);
    pos += header_len;
    const auto payload_len = take<std::uint64_t>(bytes, pos, path);
    if (payload_len > bytes.size() - pos) throw CheckpointError(fmt::format("{}: truncated payload", path.string()));
    Parsed parsed;
    parsed.payload = bytes.substr(pos, payload_len);
    pos += payload_len;
    const std::size_t body_end = pos;
    const auto stored_crc = take<std::uint32_t>(bytes, pos, path);
    if (pos != bytes.size()) throw CheckpointError(fmt::format("{}: trailing bytes after checksum", path.string()));
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data() + body_start), static_cast<uInt>(body_end - body_start)));
    if (crc != stored_crc) throw CheckpointError(fmt::format("{}: checksum mismatch (corrupt checkpoint)", path.string()));
    try {
        parsed.header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(fmt::format("{}: malformed header: {}", path.string(), e.what()));
    }
    return parsed;
}

void append_tensor(std::string& payload, nlohmann::json& index, const std::string& key, const nn::Tensor& t) {
    const auto& s = t.shape();
    index.push_back({{"name", key}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", payload.size()}});
    payload.append(reinterpret_cast<const char*>(t.data()), t.numel() * sizeof(float));
}

}  // namespace

void save_checkpoint(const fs::path& path, const MattingNet& net, const CheckpointMeta& meta) {
    nlohmann::json index = nlohmann::json::array();
    std::string payload;
    for (const auto& p : net.store().parameters()) append_tensor(payload, index, "param:" + p->name, p->value);
    for (const auto& b : net.store().buffers()) append_tensor(payload, index, "buffer:" + b->name, b->value);
    for (const auto& [name, t] : meta.optimizer_state) append_tensor(payload, index, "momentum:" + name, t);

    nlohmann::json header = {{"format", "msia-checkpoint"},
                             {"model", to_json(net.config())},
                             {"init_seed", net.init_seed()},
                             {"epoch", meta.epoch},
                             {"iteration", meta.iteration},
                             {"training", meta.training},
                             {"tensors", index}};
    const std::string header_text = header.dump();

    std::string body;
    put<std::uint64_t>(body, header_text.size());
    body += header_text;
    put<std::uint64_t>(body, payload.size());
    body += payload;

    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    out += body;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(
                                crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
    write_file_atomic(path, out);
}

ModelConfig read_checkpoint_config(const fs::path& path) {
    try {
        return model_config_from_json(parse(path).header.at("model"));
    } catch (const ConfigError& e) {
        throw CheckpointError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
    Parsed parsed = parse(path);
    LoadedCheckpoint loaded;
    try {
        const auto& h = parsed.header;
        const ModelConfig config = model_config_from_json(h.at("model"));
        loaded.net = std::make_unique<MattingNet>(config, h.at("init_seed").get<std::uint64_t>());
        loaded.meta.epoch = h.at("epoch").get<int>();
        loaded.meta.iteration = h.at("iteration").get<std::int64_t>();
        loaded.meta.training = h.at("training");

        std::size_t params_seen = 0, buffers_seen = 0;
        for (const auto& entry : h.at("tensors")) {
            const std::string key = entry.at("name").get<std::string>();
            const auto dims = entry.at("shape").get<std::array<int, 4>>();
            const nn::Shape4 shape{dims[0], dims[1], dims[2], dims[3]};
            const std::size_t offset = entry.at("offset").get<std::size_t>();
            const std::size_t bytes = shape.numel() * sizeof(float);
            if (offset > parsed.payload.size() || bytes > parsed.payload.size() - offset)
                throw CheckpointError(fmt::format("tensor '{}' exceeds payload", key));

            nn::Tensor* target = nullptr;
            nn::Tensor scratch;
            if (key.rfind("param:", 0) == 0) {
                auto* p = loaded.net->store().find_parameter(key.substr(6));
                if (!p) throw CheckpointError(fmt::format("unexpected parameter '{}'", key.substr(6)));
                target = &p->value;
                ++params_seen;
            } else if (key.rfind("buffer:", 0) == 0) {
                auto* b = loaded.net->store().find_buffer(key.substr(7));
                if (!b) throw CheckpointError(fmt::format("unexpected buffer '{}'", key.substr(7)));
                target = &b->value;
                ++buffers_seen;
            } else if (key.rfind("momentum:", 0) == 0) {
                scratch = nn::Tensor(shape);
                target = &scratch;
            } else {
                throw CheckpointError(fmt::format("unknown tensor kind '{}'", key));
            }
            if (target->shape() != shape)
                throw CheckpointError(fmt::format("tensor '{}' has shape {}, network expects {}", key, shape.str(),
                                                  target->shape().str()));
            std::memcpy(target->data(), parsed.payload.data() + offset, bytes);
            if (target == &scratch) loaded.meta.optimizer_state.emplace_back(key.substr(9), std::move(scratch));
        }
        if (params_seen != loaded.net->store().parameters().size() ||
            buffers_seen != loaded.net->store().buffers().size())
            throw CheckpointError("checkpoint does not cover every parameter and buffer of the network");
    } catch (const CheckpointError& e) {
        throw CheckpointError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const Error& e) {
        throw CheckpointError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(fmt::format("{}: malformed header: {}", path.string(), e.what()));
    }
    return loaded;
}

}  // namespace msia::model
