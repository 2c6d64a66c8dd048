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

#include <filesystem>
#include <fstream>
#include <random>

#include "core/errors.hpp"
#include "model/checkpoint.hpp"
#include "oracles.hpp"

using namespace msia;
using namespace msia::model;
namespace fs = std::filesystem;

namespace {

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Small config keeps the file in the low megabytes.
MattingNet make_net(AblationVariant v, std::uint64_t seed) {
    ModelConfig c;
    c.variant = v;
    return MattingNet(c, seed);
}

}  // namespace

TEST_CASE("checkpoint round trip preserves every tensor and the metadata") {
    const auto dir = oracle::scratch_dir("ckpt_roundtrip");
    MattingNet net = make_net(AblationVariant::full, 11);
    // Perturb something so we are not just re-deriving the initialisation.
    net.assembly()->set_raw_weights(2.5, 0.75);
    net.store().find_buffer("aspp.project.bn.running_mean")->value.fill(0.25f);

    CheckpointMeta meta;
    meta.epoch = 3;
    meta.iteration = 42;
    meta.training = {{"lr0", 0.01}};
    nn::Tensor momentum(net.store().parameters().front()->value.shape(), 0.125f);
    meta.optimizer_state.emplace_back(net.store().parameters().front()->name, momentum);

    const auto path = dir / "a.ckpt";
    save_checkpoint(path, net, meta);
    LoadedCheckpoint loaded = load_checkpoint(path);
    REQUIRE(loaded.net);
    CHECK(loaded.net->config() == net.config());
    CHECK(loaded.net->init_seed() == 11);
    CHECK(loaded.meta.epoch == 3);
    CHECK(loaded.meta.iteration == 42);
    CHECK(loaded.meta.training.at("lr0").get<double>() == 0.01);
    REQUIRE(loaded.meta.optimizer_state.size() == 1);
    CHECK(loaded.meta.optimizer_state[0].second == momentum);

    for (const auto& p : net.store().parameters()) {
        INFO(p->name);
        CHECK(loaded.net->store().find_parameter(p->name)->value == p->value);
    }
    for (const auto& b : net.store().buffers()) {
        INFO(b->name);
        CHECK(loaded.net->store().find_buffer(b->name)->value == b->value);
    }

    std::mt19937_64 rng(1);
    const ImageRGB img = oracle::random_image(rng, 64, 64);
    CHECK(net.predict(img) == loaded.net->predict(img));
    CHECK(read_checkpoint_config(path) == net.config());
}

TEST_CASE("every variant round-trips") {
    const auto dir = oracle::scratch_dir("ckpt_variants");
    for (const auto v : all_variants()) {
        MattingNet net = make_net(v, 2);
        save_checkpoint(dir / "v.ckpt", net, {});
        CHECK(read_checkpoint_config(dir / "v.ckpt").variant == v);
        CHECK(load_checkpoint(dir / "v.ckpt").net->parameter_count() == net.parameter_count());
    }
}

TEST_CASE("damaged checkpoints are rejected") {
    const auto dir = oracle::scratch_dir("ckpt_damage");
    MattingNet net = make_net(AblationVariant::inist, 3);
    const auto good = dir / "good.ckpt";
    save_checkpoint(good, net, {});
    const auto bytes = read_bytes(good);
    REQUIRE(bytes.size() > 1000);

    SUBCASE("flipped payload byte fails the CRC") {
        auto b = bytes;
        b[b.size() / 2] ^= 0x40;
        write_bytes(dir / "bad.ckpt", b);
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), CheckpointError);
    }
    SUBCASE("truncation") {
        auto b = bytes;
        b.resize(b.size() - 100);
        write_bytes(dir / "bad.ckpt", b);
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), CheckpointError);
        b.resize(10);
        write_bytes(dir / "bad.ckpt", b);
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), CheckpointError);
        CHECK_THROWS_AS(read_checkpoint_config(dir / "bad.ckpt"), CheckpointError);
    }
    SUBCASE("wrong magic") {
        auto b = bytes;
        b[0] = 'X';
        write_bytes(dir / "bad.ckpt", b);
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), CheckpointError);
    }
    SUBCASE("empty and missing files") {
        write_bytes(dir / "bad.ckpt", {});
        CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), CheckpointError);
        CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
    }
}

TEST_CASE("saving is deterministic") {
    const auto dir = oracle::scratch_dir("ckpt_bytes");
    save_checkpoint(dir / "a.ckpt", make_net(AblationVariant::baseline, 5), {});
    save_checkpoint(dir / "b.ckpt", make_net(AblationVariant::baseline, 5), {});
    CHECK(read_bytes(dir / "a.ckpt") == read_bytes(dir / "b.ckpt"));
    CHECK_FALSE(fs::exists(dir / "a.ckpt.tmp"));
}
