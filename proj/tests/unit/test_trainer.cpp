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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/manifest.hpp"
#include "model/checkpoint.hpp"
#include "oracles.hpp"
#include "trainer/ablation.hpp"
#include "trainer/augment.hpp"
#include "trainer/config.hpp"
#include "trainer/sgd.hpp"
#include "trainer/trainer.hpp"

using namespace msia;
using namespace msia::trainer;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `count` random image/alpha pairs plus a manifest; returns the manifest path.
fs::path tiny_dataset(const fs::path& root, int count, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ManifestRecord> records;
    for (int i = 0; i < count; ++i) {
        ManifestRecord r;
        r.composite = "c" + std::to_string(i) + ".png";
        r.alpha = "a" + std::to_string(i) + ".png";
        r.fg_id = std::to_string(i);
        r.bg_id = "0";
        r.split = "train";
        save_image_rgb(root / r.composite, oracle::random_image(rng, size, size));
        save_alpha(root / r.alpha, oracle::blobby_matte(rng, size, size));
        records.push_back(r);
    }
    write_manifest(root / "train.jsonl", records);
    return root / "train.jsonl";
}

TrainingConfig small_config(const fs::path& manifest, const fs::path& out) {
    TrainingConfig cfg;
    cfg.train_manifest = manifest.string();
    cfg.output_dir = out.string();
    cfg.crop_sizes = {64};
    cfg.target_size = 64;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.checkpoint_every = 0;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("poly learning rate") {
    CHECK(poly_lr(0, 100, 0.01, 0.9) == 0.01);
    CHECK(poly_lr(100, 100, 0.01, 0.9) == 0.0);
    CHECK(poly_lr(50, 100, 0.01, 0.9) == doctest::Approx(0.01 * std::pow(0.5, 0.9)));
    double prev = 1.0;
    for (int i = 0; i <= 100; ++i) {
        const double lr = poly_lr(i, 100, 0.01, 0.9);
        CHECK(lr < prev);
        CHECK(lr >= 0.0);
        prev = lr;
    }
    CHECK_THROWS_AS(poly_lr(101, 100, 0.01, 0.9), ConfigError);
    CHECK_THROWS_AS(poly_lr(-1, 100, 0.01, 0.9), ConfigError);
}

TEST_CASE("iterations per epoch round up") {
    CHECK(iterations_per_epoch(4, 4) == 1);
    CHECK(iterations_per_epoch(5, 4) == 2);
    CHECK(iterations_per_epoch(1, 4) == 1);
}

TEST_CASE("sgd applies decay only to convolution parameters") {
    model::MattingNet net(model::ModelConfig{}, 1);
    const auto before = [&] {
        std::vector<nn::Tensor> v;
        for (const auto& p : net.store().parameters()) v.push_back(p->value);
        return v;
    }();
    net.store().zero_grad();
    Sgd sgd(net.store(), 0.9, 0.0005);
    const double lr = 0.01;
    sgd.step(lr);
    const auto& params = net.store().parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = *params[i];
        INFO(p.name);
        for (std::size_t k = 0; k < p.value.numel(); k += 97) {
            const float expected = p.decay ? static_cast<float>(before[i].data()[k] * (1.0 - lr * 0.0005))
                                           : before[i].data()[k];
            REQUIRE(p.value.data()[k] == doctest::Approx(expected).epsilon(1e-6));
        }
    }
    CHECK_FALSE(net.store().find_parameter("aspp.project.bn.weight")->decay);
    CHECK_FALSE(net.store().find_parameter("assembly.aspp_logit")->decay);
    CHECK(net.store().find_parameter("decoder.fuse2.conv.bias")->decay);

    const auto state = sgd.state();
    Sgd other(net.store(), 0.9, 0.0005);
    other.load_state(state);
    CHECK(other.state() == state);
}

TEST_CASE("sgd momentum follows the heavy-ball recurrence") {
    nn::ParameterStore store;
    nn::Parameter& p = store.add_parameter("w", {1, 1, 1, 1}, false);
    p.value.fill(1.0f);
    Sgd sgd(store, 0.9, 0.0);
    double w = 1.0, v = 0.0;
    for (int i = 0; i < 5; ++i) {
        p.grad.fill(0.5f);
        sgd.step(0.1);
        v = 0.9 * v + 0.5;
        w -= 0.1 * v;
        CHECK(p.value.data()[0] == doctest::Approx(w).epsilon(1e-6));
    }
}

TEST_CASE("augmentation") {
    std::mt19937_64 rng(41);
    const ImageRGB image = oracle::random_image(rng, 90, 150);
    const AlphaMatte alpha = oracle::blobby_matte(rng, 90, 150);
    AugmentOptions opts;

    SUBCASE("deterministic per seed and always target-sized") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const AugmentedSample a = augment(image, alpha, opts, seed), b = augment(image, alpha, opts, seed);
            CHECK(a.image == b.image);
            CHECK(a.alpha == b.alpha);
            CHECK(a.image.height() == 128);
            CHECK(a.image.width() == 128);
            CHECK(a.alpha.height() == 128);
            CHECK(std::find(opts.crop_sizes.begin(), opts.crop_sizes.end(), a.crop_size) != opts.crop_sizes.end());
            a.image.validate();
            a.alpha.validate();
        }
    }
    SUBCASE("flip decision and crop size vary with the seed") {
        int flips = 0;
        std::set<int> sizes;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const AugmentedSample a = augment(image, alpha, opts, seed);
            flips += a.flipped;
            sizes.insert(a.crop_size);
        }
        CHECK(flips > 60);
        CHECK(flips < 140);
        CHECK(sizes.size() == 3);
    }
    SUBCASE("flip is applied identically to image and alpha") {
        opts.crop_sizes = {128};
        AugmentOptions no_flip = opts, always = opts;
        no_flip.flip_prob = 0.0;
        always.flip_prob = 1.0;
        const AugmentedSample a = augment(image, alpha, no_flip, 3), b = augment(image, alpha, always, 3);
        CHECK(b.flipped);
        CHECK_FALSE(a.flipped);
        CHECK(a.crop_size == b.crop_size);
        CHECK(flip_horizontal(a.image) == b.image);
        CHECK(flip_horizontal(a.alpha) == b.alpha);
        CHECK(flip_horizontal(flip_horizontal(a.alpha)) == a.alpha);
    }
    SUBCASE("crop at target size is an exact window of the padded input") {
        opts.crop_sizes = {128};
        opts.flip_prob = 0.0;
        const AugmentedSample a = augment(image, alpha, opts, 5);
        const AlphaMatte padded = pad_reflect(alpha, 128, 128);
        CHECK(a.alpha == crop(padded, a.y0, a.x0, 128, 128));
    }
    SUBCASE("mismatched inputs") {
        CHECK_THROWS_AS(augment(image, AlphaMatte(10, 10), opts, 0), ShapeError);
    }
}

TEST_CASE("config parsing, overrides and validation") {
    const TrainingConfig cfg = parse_config(
        "# comment\n"
        "lr0 = 0.02\n"
        "epochs=3\n"
        "crop_sizes = 128, 256\n"
        "variant = inist\n"
        "\n"
        "seed = 99  # trailing\n");
    CHECK(cfg.lr0 == 0.02);
    CHECK(cfg.epochs == 3);
    CHECK(cfg.crop_sizes == std::vector<int>{128, 256});
    CHECK(cfg.model.variant == model::AblationVariant::inist);
    CHECK(cfg.seed == 99);
    CHECK(cfg.momentum == 0.9);

    try {
        parse_config("lr0 = 0.1\nlearning_rate = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("learning_rate") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("epochs = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("just text\n"), ConfigError);

    TrainingConfig c = cfg;
    apply_overrides(c, {"batch_size=8", "variant=full", "profile=toy"});
    CHECK(c.batch_size == 8);
    CHECK(get_value(c, "variant") == "full");
    CHECK_THROWS_AS(apply_overrides(c, {"batch_size"}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(c, {"nope=1"}), ConfigError);

    // Every key survives a text round trip.
    const TrainingConfig back = parse_config(to_text(c));
    for (const auto& key : config_keys()) CHECK(get_value(back, key) == get_value(c, key));

    TrainingConfig bad;
    CHECK_NOTHROW(validate(bad));
    bad.target_size = 100;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = {};
    bad.crop_sizes = {64};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = {};
    bad.momentum = 1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = {};
    bad.flip_prob = 1.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("zero-epoch training saves the initial network") {
    const auto dir = oracle::scratch_dir("trainer_zero");
    TrainingConfig cfg = small_config(tiny_dataset(dir, 2, 64, 1), dir / "run");
    cfg.epochs = 0;
    const TrainResult r = train(cfg);
    CHECK(r.log.rows.empty());
    const auto loaded = model::load_checkpoint(r.final_checkpoint);
    const auto fresh = build_model(cfg);
    for (const auto& p : fresh->store().parameters())
        CHECK(loaded.net->store().find_parameter(p->name)->value == p->value);
    CHECK(slurp(r.log_path) == "iter,epoch,lr,lambda1,lambda2,l1,ssim,total\n");
}

TEST_CASE("training logs, schedules and determinism") {
    const auto dir = oracle::scratch_dir("trainer_run");
    const fs::path manifest = tiny_dataset(dir, 3, 64, 2);
    TrainingConfig cfg = small_config(manifest, dir / "a");
    cfg.epochs = 2;
    cfg.test_manifest = manifest.string();
    cfg.checkpoint_every = 1;
    int callbacks = 0;
    const TrainResult a = train(cfg, {.on_iteration = [&](const TrainLogRow&) { ++callbacks; }});

    // 3 samples at batch 2 → 2 iterations per epoch.
    REQUIRE(a.log.rows.size() == 4);
    CHECK(callbacks == 4);
    for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
        const TrainLogRow& row = a.log.rows[i];
        CHECK(row.iter == static_cast<std::int64_t>(i));
        CHECK(row.epoch == 1 + static_cast<int>(i) / 2);
        CHECK(row.lr == poly_lr(row.iter, 4, 0.01, 0.9));
        CHECK(row.lambda1 == 1.0);
        CHECK(row.lambda2 == (row.epoch == 1 ? 0.1 : 0.025));
        CHECK(row.total == doctest::Approx(row.l1 + row.lambda2 * row.ssim).epsilon(1e-12));
    }
    CHECK(a.log.evals.size() == 2);
    CHECK(a.checkpoints.size() == 2);
    REQUIRE(a.best_checkpoint.has_value());
    CHECK(fs::is_symlink(*a.best_checkpoint));
    CHECK(fs::exists(a.output_dir / "config.txt"));
    CHECK(model::load_checkpoint(a.checkpoints[1]).meta.epoch == 2);

    const std::string csv = slurp(a.log_path);
    CHECK(csv.rfind("iter,epoch,lr,lambda1,lambda2,l1,ssim,total\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(slurp(a.eval_log_path).rfind("epoch,sad,mse,gradient,connectivity\n", 0) == 0);

    cfg.output_dir = (dir / "b").string();
    const TrainResult b = train(cfg);
    CHECK(slurp(b.log_path) == csv);
    CHECK(slurp(b.eval_log_path) == slurp(a.eval_log_path));
    // Checkpoint headers record each run's own output_dir, so compare the tensors.
    const auto ca = model::load_checkpoint(a.final_checkpoint), cb = model::load_checkpoint(b.final_checkpoint);
    for (const auto& p : ca.net->store().parameters())
        CHECK(cb.net->store().find_parameter(p->name)->value == p->value);
    CHECK(ca.meta.optimizer_state == cb.meta.optimizer_state);

    cfg.output_dir = (dir / "c").string();
    cfg.seed = 8;
    CHECK(slurp(train(cfg).log_path) != csv);
}

TEST_CASE("evaluate_model and predict_file") {
    const auto dir = oracle::scratch_dir("trainer_eval");
    const fs::path manifest = tiny_dataset(dir, 2, 64, 3);
    TrainingConfig cfg = small_config(manifest, dir / "run");
    cfg.epochs = 0;
    cfg.model.variant = model::AblationVariant::inist;
    const TrainResult r = train(cfg);

    const fs::path preds = dir / "preds";
    fs::create_directories(preds);
    const auto report = evaluate_model(r.final_checkpoint, manifest, {.label = "x", .predictions_dir = preds});
    CHECK(report.variant == std::optional<std::string>("inist"));
    CHECK(report.images.size() == 2);
    // The written predictions reproduce the report up to 8-bit quantisation.
    const auto from_files = metrics::evaluate(read_manifest(manifest), preds);
    CHECK(from_files.means.sad == doctest::Approx(report.means.sad).epsilon(1e-2));

    const AlphaMatte a = predict_file(r.final_checkpoint, dir / "c0.png", dir / "out.png",
                                      {.expected_variant = model::AblationVariant::inist, .preview_path = dir / "p.png"});
    CHECK(a.height() == 64);
    CHECK(fs::exists(dir / "out.png"));
    CHECK(load_image_rgb(dir / "p.png").width() == 3 * 64);
    try {
        predict_file(r.final_checkpoint, dir / "c0.png", dir / "out2.png",
                     {.expected_variant = model::AblationVariant::full});
        FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("inist") != std::string::npos);
        CHECK(msg.find("full") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "out2.png"));
}

TEST_CASE("untrained variants score alike") {
    // With no training the decoder heads start near zero logits, so every
    // variant predicts close to 0.5 everywhere and the SADs agree closely.
    const auto dir = oracle::scratch_dir("trainer_untrained");
    const fs::path manifest = tiny_dataset(dir, 2, 64, 4);
    TrainingConfig cfg = small_config(manifest, dir / "run");
    cfg.epochs = 0;
    cfg.test_manifest = manifest.string();
    const AblationResult res = ablation_suite(cfg);
    REQUIRE(res.rows.size() == 4);
    const double ref = res.rows[0].report.means.sad;
    for (const auto& row : res.rows) {
        INFO(model::to_string(row.variant));
        CHECK(row.report.means.sad == doctest::Approx(ref).epsilon(0.05));
        CHECK(fs::exists(row.report_path));
    }
    CHECK(res.rows[0].parameter_count < res.rows[1].parameter_count);
    CHECK(res.rows[3].parameter_count == res.rows[2].parameter_count + 2);
    CHECK(fs::exists(res.table_path));
    CHECK(fs::exists(res.summary_path));
}
