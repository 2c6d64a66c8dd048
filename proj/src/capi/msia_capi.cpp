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

#include "msia/msia.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "core/compositor.hpp"
#include "core/errors.hpp"
#include "core/shapes.hpp"
#include "metrics/report.hpp"
#include "model/checkpoint.hpp"
#include "nn/layers.hpp"
#include "trainer/ablation.hpp"
#include "trainer/config.hpp"
#include "trainer/trainer.hpp"

struct msia_config {
    msia::trainer::TrainingConfig cfg;
};

struct msia_run {
    std::string summary;
    std::vector<std::string> outputs;
};

struct msia_model {
    std::unique_ptr<msia::model::MattingNet> net;
    std::string variant;
};

namespace {

namespace fs = std::filesystem;
using namespace msia;

thread_local std::string g_last_error;

template <typename F>
msia_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return MSIA_OK;
    } catch (const ShapeError& e) {
        g_last_error = e.what();
        return MSIA_ERR_SHAPE;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return MSIA_ERR_IO;
    } catch (const ConfigError& e) {
        g_last_error = e.what();
        return MSIA_ERR_CONFIG;
    } catch (const CheckpointError& e) {
        g_last_error = e.what();
        return MSIA_ERR_CHECKPOINT;
    } catch (const TrainingError& e) {
        g_last_error = e.what();
        return MSIA_ERR_TRAINING;
    } catch (const fs::filesystem_error& e) {
        g_last_error = e.what();
        return MSIA_ERR_IO;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MSIA_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MSIA_ERR_INTERNAL;
    }
}

msia_status invalid(const char* what) {
    g_last_error = what;
    return MSIA_ERR_INVALID_ARGUMENT;
}

msia_status copy_out(const std::string& value, char* buf, size_t buf_size, size_t* needed) {
    if (needed) *needed = value.size() + 1;
    if (buf && buf_size >= value.size() + 1) {
        std::memcpy(buf, value.c_str(), value.size() + 1);
        return MSIA_OK;
    }
    if (buf || !needed) return invalid("buffer too small");
    return MSIA_OK;
}

trainer::TrainHooks progress_hooks(msia_progress_fn progress, void* user) {
    trainer::TrainHooks hooks;
    if (!progress) return hooks;
    hooks.on_iteration = [=](const trainer::TrainLogRow& r) {
        const std::string line = fmt::format("iter {} epoch {} lr {:.6g} l1 {:.6g} ssim {:.6g} total {:.6g}", r.iter,
                                             r.epoch, r.lr, r.l1, r.ssim, r.total);
        progress(line.c_str(), user);
    };
    hooks.on_eval = [=](const trainer::EvalLogRow& e) {
        const std::string line = fmt::format("eval epoch {} sad {:.6g} mse {:.6g} gradient {:.6g} connectivity {:.6g}",
                                             e.epoch, e.means.sad, e.means.mse, e.means.gradient,
                                             e.means.connectivity);
        progress(line.c_str(), user);
    };
    return hooks;
}

}  // namespace

extern "C" {

const char* msia_version(void) { return "0.1.0"; }

const char* msia_status_name(msia_status status) {
    switch (status) {
        case MSIA_OK: return "ok";
        case MSIA_ERR_INVALID_ARGUMENT: return "invalid argument";
        case MSIA_ERR_CONFIG: return "config error";
        case MSIA_ERR_IO: return "io error";
        case MSIA_ERR_SHAPE: return "shape error";
        case MSIA_ERR_CHECKPOINT: return "checkpoint error";
        case MSIA_ERR_TRAINING: return "training error";
        case MSIA_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* msia_last_error(void) { return g_last_error.c_str(); }

msia_status msia_config_create(msia_config** out) {
    if (!out) return invalid("msia_config_create: out is NULL");
    return guarded([&] { *out = new msia_config{}; });
}

msia_status msia_config_load(const char* path, msia_config** out) {
    if (!path || !out) return invalid("msia_config_load: NULL argument");
    return guarded([&] {
        auto c = std::make_unique<msia_config>();
        c->cfg = trainer::load_config(path);
        *out = c.release();
    });
}

msia_status msia_config_set(msia_config* config, const char* key, const char* value) {
    if (!config || !key || !value) return invalid("msia_config_set: NULL argument");
    return guarded([&] { trainer::set_value(config->cfg, key, value); });
}

msia_status msia_config_get(const msia_config* config, const char* key, char* buf, size_t buf_size, size_t* needed) {
    if (!config || !key) return invalid("msia_config_get: NULL argument");
    std::string value;
    const msia_status s = guarded([&] { value = trainer::get_value(config->cfg, key); });
    return s == MSIA_OK ? copy_out(value, buf, buf_size, needed) : s;
}

msia_status msia_config_to_text(const msia_config* config, char* buf, size_t buf_size, size_t* needed) {
    if (!config) return invalid("msia_config_to_text: NULL config");
    return copy_out(trainer::to_text(config->cfg), buf, buf_size, needed);
}

msia_status msia_config_validate(const msia_config* config) {
    if (!config) return invalid("msia_config_validate: NULL config");
    return guarded([&] { trainer::validate(config->cfg); });
}

void msia_config_destroy(msia_config* config) { delete config; }

const char* msia_run_summary(const msia_run* run) { return run ? run->summary.c_str() : ""; }

size_t msia_run_output_count(const msia_run* run) { return run ? run->outputs.size() : 0; }

const char* msia_run_output(const msia_run* run, size_t index) {
    if (!run || index >= run->outputs.size()) return nullptr;
    return run->outputs[index].c_str();
}

void msia_run_destroy(msia_run* run) { delete run; }

msia_status msia_synth(const msia_config* config, int generate_shapes, msia_run** out) {
    if (!config || !out) return invalid("msia_synth: NULL argument");
    *out = nullptr;
    auto run = std::make_unique<msia_run>();
    const msia_status s = guarded([&] {
        const auto& cfg = config->cfg;
        if (cfg.per_fg < 1) throw ConfigError(fmt::format("per_fg must be ≥ 1, got {}", cfg.per_fg));
        const fs::path data_dir = trainer::resolve_output_path(cfg.data_dir);
        fs::path fg = cfg.fg_dir, alpha = cfg.alpha_dir, bg = cfg.bg_dir;
        if (generate_shapes) {
            ShapeAssetOptions so;
            so.fg_count = cfg.shape_fg_count;
            so.bg_count = cfg.shape_bg_count;
            so.size = cfg.shape_size;
            so.seed = mix_seed(cfg.seed, nn::name_hash(cfg.split));
            const ShapeAssetDirs dirs = generate_shape_assets(data_dir / "assets" / cfg.split, so);
            fg = dirs.fg_dir;
            alpha = dirs.alpha_dir;
            bg = dirs.bg_dir;
        } else if (fg.empty() || alpha.empty() || bg.empty()) {
            throw ConfigError("synth needs fg_dir, alpha_dir and bg_dir (or generated shapes)");
        }
        const auto fgs = discover_foregrounds(fg, alpha);
        const auto bgs = discover_backgrounds(bg);
        SynthesisOptions so;
        so.per_fg = cfg.per_fg;
        so.seed = cfg.seed;
        so.split = cfg.split;
        so.out_dir = data_dir;
        const SynthesisReport rep = synthesize_split(fgs, bgs, so);
        if (!rep.ok()) {
            run->outputs.push_back(rep.failure_report_path.string());
            throw IoError(fmt::format("{} of {} composites failed (first: {}); failure report: {}", rep.errors.size(),
                                      rep.errors.size() + rep.records.size(), rep.errors.front().message,
                                      rep.failure_report_path.string()));
        }
        run->outputs.push_back(rep.manifest_path.string());
        run->summary = fmt::format("{} composites from {} foregrounds x {} backgrounds -> {}", rep.records.size(),
                                   fgs.size(), bgs.size(), rep.manifest_path.string());
    });
    *out = run.release();
    return s;
}

msia_status msia_train(const msia_config* config, msia_progress_fn progress, void* user, msia_run** out) {
    if (!config || !out) return invalid("msia_train: NULL argument");
    *out = nullptr;
    return guarded([&] {
        auto run = std::make_unique<msia_run>();
        const trainer::TrainResult r = trainer::train(config->cfg, progress_hooks(progress, user));
        run->outputs = {r.final_checkpoint.string(), r.log_path.string(), r.eval_log_path.string()};
        if (r.best_checkpoint) run->outputs.push_back(r.best_checkpoint->string());
        const double first = r.log.rows.empty() ? 0.0 : r.log.rows.front().total;
        const double last = r.log.rows.empty() ? 0.0 : r.log.rows.back().total;
        run->summary = fmt::format("{} iterations, {} parameters, loss {:.6g} -> {:.6g}", r.log.rows.size(),
                                   r.net->parameter_count(), first, last);
        *out = run.release();
    });
}

msia_status msia_eval(const msia_config* config, const char* checkpoint_path, const char* predictions_dir,
                      const char* report_path, int allow_missing, msia_run** out) {
    if (!config || !out) return invalid("msia_eval: NULL argument");
    if ((checkpoint_path == nullptr) == (predictions_dir == nullptr))
        return invalid("msia_eval: pass exactly one of checkpoint_path and predictions_dir");
    *out = nullptr;
    return guarded([&] {
        const auto& cfg = config->cfg;
        if (cfg.test_manifest.empty()) throw ConfigError("eval: 'test_manifest' is not set");
        const DatasetManifest manifest = read_manifest(cfg.test_manifest);
        metrics::MetricsReport report;
        if (checkpoint_path) {
            auto loaded = model::load_checkpoint(checkpoint_path);
            trainer::EvalOptions eo;
            eo.label = fs::absolute(checkpoint_path).parent_path().filename().string();
            report = trainer::evaluate_model(*loaded.net, manifest, eo);
        } else {
            metrics::EvaluateOptions eo;
            eo.allow_missing = allow_missing != 0;
            fs::path dir = fs::absolute(predictions_dir).lexically_normal();
            if (dir.filename().empty()) dir = dir.parent_path();
            eo.label = dir.filename().string();
            report = metrics::evaluate(manifest, predictions_dir, eo);
        }
        const fs::path path =
            report_path ? fs::path(report_path) : trainer::resolve_output_path(cfg.output_dir) / "report.json";
        metrics::write_report(path, report);
        auto run = std::make_unique<msia_run>();
        run->outputs.push_back(path.string());
        run->summary = metrics::render_table({report});
        if (!report.missing.empty())
            run->summary += fmt::format("{} prediction(s) missing, excluded from means\n", report.missing.size());
        *out = run.release();
    });
}

msia_status msia_ablate(const msia_config* config, msia_progress_fn progress, void* user, msia_run** out) {
    if (!config || !out) return invalid("msia_ablate: NULL argument");
    *out = nullptr;
    return guarded([&] {
        const trainer::AblationResult r = trainer::ablation_suite(config->cfg, progress_hooks(progress, user));
        auto run = std::make_unique<msia_run>();
        run->summary = r.table;
        for (const auto& row : r.rows) run->summary += fmt::format("{}: {} parameters\n",
                                                                     model::to_string(row.variant),
                                                                     row.parameter_count);
        run->outputs.push_back(r.table_path.string());
        run->outputs.push_back(r.summary_path.string());
        for (const auto& row : r.rows) run->outputs.push_back(row.report_path.string());
        *out = run.release();
    });
}

msia_status msia_report(const char* const* report_paths, size_t count, const char* plot_dir, msia_run** out) {
    if (!out || (count > 0 && !report_paths)) return invalid("msia_report: NULL argument");
    *out = nullptr;
    return guarded([&] {
        if (count == 0) throw ConfigError("report: at least one metrics report is required");
        std::vector<metrics::MetricsReport> reports;
        for (size_t i = 0; i < count; ++i) reports.push_back(metrics::read_report(report_paths[i]));
        auto run = std::make_unique<msia_run>();
        run->summary = metrics::render_table(reports);
        if (plot_dir)
            for (const auto& p : metrics::write_bar_plots(plot_dir, reports)) run->outputs.push_back(p.string());
        *out = run.release();
    });
}

msia_status msia_predict_file(const char* checkpoint_path, const char* image_path, const char* output_path,
                              const char* expected_variant, const char* preview_path) {
    if (!checkpoint_path || !image_path || !output_path) return invalid("msia_predict_file: NULL argument");
    return guarded([&] {
        trainer::PredictOptions po;
        if (expected_variant) po.expected_variant = model::parse_variant(expected_variant);
        if (preview_path) po.preview_path = preview_path;
        trainer::predict_file(checkpoint_path, image_path, output_path, po);
    });
}

msia_status msia_model_create(const msia_config* config, msia_model** out) {
    if (!config || !out) return invalid("msia_model_create: NULL argument");
    return guarded([&] {
        auto m = std::make_unique<msia_model>();
        m->net = trainer::build_model(config->cfg);
        m->variant = model::to_string(m->net->config().variant);
        *out = m.release();
    });
}

msia_status msia_model_load(const char* checkpoint_path, msia_model** out) {
    if (!checkpoint_path || !out) return invalid("msia_model_load: NULL argument");
    return guarded([&] {
        auto m = std::make_unique<msia_model>();
        m->net = model::load_checkpoint(checkpoint_path).net;
        m->variant = model::to_string(m->net->config().variant);
        *out = m.release();
    });
}

msia_status msia_model_save(const msia_model* model, const char* checkpoint_path) {
    if (!model || !checkpoint_path) return invalid("msia_model_save: NULL argument");
    return guarded([&] { model::save_checkpoint(checkpoint_path, *model->net, {}); });
}

size_t msia_model_parameter_count(const msia_model* model) { return model ? model->net->parameter_count() : 0; }

const char* msia_model_variant(const msia_model* model) { return model ? model->variant.c_str() : ""; }

msia_status msia_model_predict(msia_model* model, const float* rgb, int height, int width, float* alpha) {
    if (!model || !rgb || !alpha) return invalid("msia_model_predict: NULL argument");
    if (height <= 0 || width <= 0) return invalid("msia_model_predict: non-positive dimensions");
    return guarded([&] {
        ImageRGB image(height, width);
        std::memcpy(image.pixels().data(), rgb, image.pixels().size() * sizeof(float));
        image.validate();
        const AlphaMatte a = model->net->predict(image);
        for (std::size_t i = 0; i < a.size(); ++i) alpha[i] = static_cast<float>(a.values()[i]);
    });
}

void msia_model_destroy(msia_model* model) { delete model; }

}  // extern "C"
