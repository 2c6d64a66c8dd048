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

#include "trainer/trainer.hpp"

#include <cmath>
#include <random>

#include <fmt/core.h>
#include <json.hpp>

#include "core/compositor.hpp"
#include "core/errors.hpp"
#include "losses/losses.hpp"
#include "model/checkpoint.hpp"
#include "trainer/augment.hpp"
#include "trainer/sgd.hpp"

namespace msia::trainer {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kShuffleStream = 0x53485546464c45ULL;
constexpr std::uint64_t kAugmentStream = 0x4155474d454e54ULL;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(seed ^ kShuffleStream, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    return order;
}

void write_diagnostic_dump(const fs::path& dir, const model::MattingNet& net, const TrainLogRow& row,
                           const std::vector<std::string>& ids, const std::vector<AugmentedSample>& batch) {
    nlohmann::json j;
    j["iter"] = row.iter;
    j["epoch"] = row.epoch;
    j["lr"] = row.lr;
    j["lambda1"] = row.lambda1;
    j["lambda2"] = row.lambda2;
    j["l1"] = std::isfinite(row.l1) ? nlohmann::json(row.l1) : nlohmann::json(fmt::format("{}", row.l1));
    j["ssim"] = std::isfinite(row.ssim) ? nlohmann::json(row.ssim) : nlohmann::json(fmt::format("{}", row.ssim));
    nlohmann::json inputs = nlohmann::json::array();
    for (std::size_t i = 0; i < batch.size(); ++i)
        inputs.push_back({{"id", ids[i]},
                          {"crop_size", batch[i].crop_size},
                          {"y0", batch[i].y0},
                          {"x0", batch[i].x0},
                          {"flipped", batch[i].flipped}});
    j["inputs"] = std::move(inputs);
    nlohmann::json norms = nlohmann::json::object();
    for (const auto& p : net.store().parameters()) {
        const double n = std::sqrt(nn::squared_norm(p->value));
        norms[p->name] = std::isfinite(n) ? nlohmann::json(n) : nlohmann::json(fmt::format("{}", n));
    }
    j["weight_norms"] = std::move(norms);
    write_file_atomic(dir / "nan_dump.json", j.dump(2) + "\n");
}

model::CheckpointMeta make_meta(const TrainingConfig& cfg, int epoch, std::int64_t iter, const Sgd* sgd) {
    model::CheckpointMeta meta;
    meta.epoch = epoch;
    meta.iteration = iter;
    meta.training = to_json(cfg);
    if (sgd) meta.optimizer_state = sgd->state();
    return meta;
}

void write_logs(const TrainResult& r) {
    write_file_atomic(r.log_path, r.log.csv());
    write_file_atomic(r.eval_log_path, r.log.eval_csv());
}

}  // namespace

std::string TrainLog::csv() const {
    std::string out = "iter,epoch,lr,lambda1,lambda2,l1,ssim,total\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.iter, r.epoch, r.lr, r.lambda1,
                           r.lambda2, r.l1, r.ssim, r.total);
    return out;
}

std::string TrainLog::eval_csv() const {
    std::string out = "epoch,sad,mse,gradient,connectivity\n";
    for (const auto& e : evals)
        out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.epoch, e.means.sad, e.means.mse,
                           e.means.gradient, e.means.connectivity);
    return out;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
    std::vector<Sample> out;
    out.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        auto [image, alpha] = load_pair(manifest.composite_path(r), manifest.alpha_path(r));
        out.push_back({metrics::record_id(r), std::move(image), std::move(alpha)});
    }
    return out;
}

std::int64_t iterations_per_epoch(std::size_t samples, int batch_size) {
    if (batch_size <= 0) throw ConfigError(fmt::format("batch_size must be positive, got {}", batch_size));
    return static_cast<std::int64_t>((samples + batch_size - 1) / batch_size);
}

std::unique_ptr<model::MattingNet> build_model(const TrainingConfig& cfg) {
    return std::make_unique<model::MattingNet>(cfg.model, cfg.seed);
}

TrainResult train(const TrainingConfig& cfg, const TrainHooks& hooks) {
    validate(cfg);
    if (cfg.train_manifest.empty()) throw ConfigError("train: 'train_manifest' is not set");
    const DatasetManifest manifest = read_manifest(cfg.train_manifest);
    if (manifest.records.empty()) throw ConfigError(fmt::format("train: manifest {} is empty", cfg.train_manifest));
    std::optional<DatasetManifest> test_manifest;
    if (!cfg.test_manifest.empty() && cfg.eval_every > 0) test_manifest = read_manifest(cfg.test_manifest);

    TrainResult result;
    result.output_dir = resolve_output_path(cfg.output_dir);
    fs::create_directories(result.output_dir / "checkpoints");
    result.final_checkpoint = result.output_dir / "last.ckpt";
    result.log_path = result.output_dir / "train_log.csv";
    result.eval_log_path = result.output_dir / "eval_log.csv";
    write_file_atomic(result.output_dir / "config.txt", to_text(cfg));

    const std::vector<Sample> samples = load_samples(manifest);
    result.net = build_model(cfg);
    model::MattingNet& net = *result.net;
    Sgd sgd(net.store(), cfg.momentum, cfg.weight_decay);

    losses::SsimParams ssim;
    ssim.global_statistics = cfg.ssim_global;
    AugmentOptions aug;
    aug.crop_sizes = cfg.crop_sizes;
    aug.target_size = cfg.target_size;
    aug.flip_prob = cfg.flip_prob;

    const std::int64_t per_epoch = iterations_per_epoch(samples.size(), cfg.batch_size);
    const std::int64_t total = per_epoch * cfg.epochs;
    std::int64_t iter = 0;
    double best_sad = INFINITY;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const losses::LossWeights lambdas = losses::lambda_schedule(epoch);
        const auto order = epoch_order(samples.size(), cfg.seed, epoch);
        for (std::int64_t b = 0; b < per_epoch; ++b, ++iter) {
            TrainLogRow row;
            row.iter = iter;
            row.epoch = epoch;
            row.lr = poly_lr(iter, total, cfg.lr0, cfg.poly_power);
            row.lambda1 = lambdas.lambda1;
            row.lambda2 = lambdas.lambda2;

            const std::size_t begin = static_cast<std::size_t>(b) * cfg.batch_size;
            const std::size_t end = std::min(begin + cfg.batch_size, samples.size());
            std::vector<AugmentedSample> batch;
            std::vector<std::string> ids;
            std::vector<ImageRGB> images;
            for (std::size_t k = begin; k < end; ++k) {
                const Sample& s = samples[order[k]];
                const std::uint64_t seed =
                    mix_seed(mix_seed(cfg.seed ^ kAugmentStream, static_cast<std::uint64_t>(iter)), k - begin);
                batch.push_back(augment(s.image, s.alpha, aug, seed));
                ids.push_back(s.id);
                images.push_back(batch.back().image);
            }
            const int n = static_cast<int>(batch.size());

            net.store().zero_grad();
            const nn::Tensor alpha = net.forward(model::images_to_tensor(images), true);
            nn::Tensor d_alpha(alpha.shape());
            const std::size_t plane = alpha.shape().plane();
            for (int i = 0; i < n; ++i) {
                const AlphaMatte pred = model::tensor_to_matte(alpha, i);
                const losses::LossEvaluation e = losses::evaluate_total_loss(pred, batch[i].alpha, lambdas, ssim);
                row.l1 += e.l1 / n;
                row.ssim += e.ssim / n;
                row.total += e.total / n;
                float* dst = d_alpha.plane(i, 0);
                for (std::size_t p = 0; p < plane; ++p) dst[p] = static_cast<float>(e.gradient.values()[p] / n);
            }
            if (!std::isfinite(row.total) || !alpha.all_finite()) {
                write_diagnostic_dump(result.output_dir, net, row, ids, batch);
                write_logs(result);
                throw TrainingError(fmt::format("non-finite loss at iteration {} (epoch {}); diagnostics in {}", iter,
                                                epoch, (result.output_dir / "nan_dump.json").string()));
            }
            net.backward(d_alpha);
            sgd.step(row.lr);
            result.log.rows.push_back(row);
            if (hooks.on_iteration) hooks.on_iteration(row);
        }

        std::optional<fs::path> saved;
        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
            saved = result.output_dir / "checkpoints" / fmt::format("epoch_{:04d}.ckpt", epoch);
            model::save_checkpoint(*saved, net, make_meta(cfg, epoch, iter, &sgd));
            result.checkpoints.push_back(*saved);
        }
        if (test_manifest && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
            EvalLogRow ev{epoch, evaluate_model(net, *test_manifest).means};
            result.log.evals.push_back(ev);
            if (hooks.on_eval) hooks.on_eval(ev);
            if (saved && ev.means.sad < best_sad) {
                best_sad = ev.means.sad;
                const fs::path link = result.output_dir / "best.ckpt";
                std::error_code ec;
                fs::remove(link, ec);
                fs::create_symlink(fs::path("checkpoints") / saved->filename(), link);
                result.best_checkpoint = link;
            }
        }
        write_logs(result);
    }

    model::save_checkpoint(result.final_checkpoint, net, make_meta(cfg, cfg.epochs, iter, &sgd));
    write_logs(result);
    return result;
}

metrics::MetricsReport evaluate_model(model::MattingNet& net, const DatasetManifest& manifest,
                                      const EvalOptions& options) {
    metrics::EvaluateOptions eo;
    eo.label = options.label;
    auto report = metrics::evaluate_with(
        manifest,
        [&](const ManifestRecord& r, const ImageRGB& image) {
            AlphaMatte pred = net.predict(image);
            if (options.predictions_dir) save_alpha(*options.predictions_dir / (metrics::record_id(r) + ".png"), pred);
            return pred;
        },
        eo);
    report.variant = model::to_string(net.config().variant);
    return report;
}

metrics::MetricsReport evaluate_model(const fs::path& checkpoint, const fs::path& manifest,
                                      const EvalOptions& options) {
    auto loaded = model::load_checkpoint(checkpoint);
    return evaluate_model(*loaded.net, read_manifest(manifest), options);
}

AlphaMatte predict_file(const fs::path& checkpoint, const fs::path& image_path, const fs::path& output_path,
                        const PredictOptions& options) {
    if (options.expected_variant) {
        const model::ModelConfig cfg = model::read_checkpoint_config(checkpoint);
        if (cfg.variant != *options.expected_variant)
            throw CheckpointError(fmt::format("checkpoint {} holds variant '{}' but variant '{}' was requested",
                                              checkpoint.string(), model::to_string(cfg.variant),
                                              model::to_string(*options.expected_variant)));
    }
    auto loaded = model::load_checkpoint(checkpoint);
    const ImageRGB image = load_image_rgb(image_path);
    AlphaMatte alpha = loaded.net->predict(image);
    save_alpha(output_path, alpha);
    if (options.preview_path) {
        const int h = image.height(), w = image.width();
        ImageRGB preview(h, 3 * w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double a = alpha.at(y, x);
                const float green[3] = {0.0f, 1.0f, 0.0f};
                for (int c = 0; c < 3; ++c) {
                    preview.at(y, x, c) = image.at(y, x, c);
                    preview.at(y, w + x, c) = static_cast<float>(a);
                    preview.at(y, 2 * w + x, c) =
                        static_cast<float>(green[c] + a * (image.at(y, x, c) - green[c]));
                }
            }
        save_image_rgb(*options.preview_path, preview);
    }
    return alpha;
}

}  // namespace msia::trainer
