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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msia/msia.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

int exit_code(msia_status s) {
    switch (s) {
        case MSIA_OK: return kExitOk;
        case MSIA_ERR_INVALID_ARGUMENT:
        case MSIA_ERR_CONFIG:
        case MSIA_ERR_IO:
        case MSIA_ERR_SHAPE: return kExitInput;
        default: return kExitRuntime;
    }
}

int fail(const char* what, msia_status s) {
    std::fprintf(stderr, "msia %s: %s: %s\n", what, msia_status_name(s), msia_last_error());
    return exit_code(s);
}

struct ConfigDeleter {
    void operator()(msia_config* c) const { msia_config_destroy(c); }
};
struct RunDeleter {
    void operator()(msia_run* r) const { msia_run_destroy(r); }
};
using ConfigPtr = std::unique_ptr<msia_config, ConfigDeleter>;
using RunPtr = std::unique_ptr<msia_run, RunDeleter>;

/// Options every pipeline subcommand shares: a config file, generic
/// key=value overrides, and named shortcuts for the common keys.
struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::vector<std::pair<std::string, std::string>> named;  // key, value (empty = unset)
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", args.overrides, "Override a config key (key=value); repeatable, applied last");
}

void add_named(CLI::App* cmd, CommonArgs& args, const std::string& flag, const std::string& key,
               const std::string& help) {
    args.named.emplace_back(key, std::string{});
    // The vector is fully populated before parsing, so the index stays valid.
    const std::size_t index = args.named.size() - 1;
    cmd->add_option_function<std::string>(
        flag, [&args, index](const std::string& v) { args.named[index].second = v; }, help);
}

/// Config file, then named flags, then --set overrides (the last word wins).
int build_config(const CommonArgs& args, ConfigPtr& out) {
    msia_config* raw = nullptr;
    msia_status s = args.config_path.empty() ? msia_config_create(&raw) : msia_config_load(args.config_path.c_str(), &raw);
    if (s != MSIA_OK) return fail("config", s);
    out.reset(raw);
    for (const auto& [key, value] : args.named) {
        if (value.empty()) continue;
        if ((s = msia_config_set(raw, key.c_str(), value.c_str())) != MSIA_OK) return fail("config", s);
    }
    for (const auto& o : args.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "msia config: override '%s' is not of the form key=value\n", o.c_str());
            return kExitInput;
        }
        const std::string key = o.substr(0, eq), value = o.substr(eq + 1);
        if ((s = msia_config_set(raw, key.c_str(), value.c_str())) != MSIA_OK) return fail("config", s);
    }
    if ((s = msia_config_validate(raw)) != MSIA_OK) return fail("config", s);
    return kExitOk;
}

void print_run(const msia_run* run) {
    const std::string summary = msia_run_summary(run);
    if (!summary.empty()) std::printf("%s%s", summary.c_str(), summary.back() == '\n' ? "" : "\n");
    for (std::size_t i = 0; i < msia_run_output_count(run); ++i) std::printf("wrote %s\n", msia_run_output(run, i));
}

void print_progress(const char* line, void* user) {
    if (*static_cast<bool*>(user)) return;
    std::printf("%s\n", line);
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trimap-free alpha matting: synthesis, training, evaluation and ablation"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", msia_version());

    // synth
    CommonArgs synth_args;
    bool synth_shapes = false;
    auto* synth = app.add_subcommand("synth", "Composite foregrounds over backgrounds into a manifest");
    add_common(synth, synth_args);
    synth->add_flag("--shapes", synth_shapes, "Generate a synthetic shape asset set first");
    add_named(synth, synth_args, "--fg-dir", "fg_dir", "Foreground image directory");
    add_named(synth, synth_args, "--alpha-dir", "alpha_dir", "Alpha directory (same stems as foregrounds)");
    add_named(synth, synth_args, "--bg-dir", "bg_dir", "Background image directory");
    add_named(synth, synth_args, "-o,--out", "data_dir", "Output dataset directory");
    add_named(synth, synth_args, "--split", "split", "Split name (manifest is <out>/<split>.jsonl)");
    add_named(synth, synth_args, "--per-fg", "per_fg", "Composites per foreground");
    add_named(synth, synth_args, "--seed", "seed", "Random seed");

    // train
    CommonArgs train_args;
    bool train_quiet = false;
    auto* train = app.add_subcommand("train", "Train a model with momentum SGD and the poly schedule");
    add_common(train, train_args);
    add_named(train, train_args, "--train-manifest", "train_manifest", "Training manifest");
    add_named(train, train_args, "--test-manifest", "test_manifest", "Manifest for per-epoch evaluation");
    add_named(train, train_args, "-o,--out", "output_dir", "Output directory");
    add_named(train, train_args, "--epochs", "epochs", "Number of epochs");
    add_named(train, train_args, "--variant", "variant", "baseline | inist | inist_sedst | full");
    add_named(train, train_args, "--profile", "profile", "toy | full");
    add_named(train, train_args, "--seed", "seed", "Random seed");
    train->add_flag("-q,--quiet", train_quiet, "Suppress per-iteration output");

    // eval
    CommonArgs eval_args;
    std::optional<std::string> eval_checkpoint, eval_predictions, eval_report;
    bool eval_allow_missing = false;
    auto* eval = app.add_subcommand("eval", "Score a checkpoint or a directory of predictions");
    add_common(eval, eval_args);
    add_named(eval, eval_args, "--test-manifest", "test_manifest", "Manifest to evaluate on");
    add_named(eval, eval_args, "-o,--out", "output_dir", "Output directory (default report location)");
    auto* ckpt_opt = eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint to run inference with");
    auto* pred_opt = eval->add_option("--predictions", eval_predictions, "Directory of <id>.png predictions");
    ckpt_opt->excludes(pred_opt);
    eval->add_option("--report", eval_report, "Report JSON path");
    eval->add_flag("--allow-missing", eval_allow_missing, "Exclude missing predictions from the means");

    // ablate
    CommonArgs ablate_args;
    bool ablate_quiet = false;
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the four ablation variants");
    add_common(ablate, ablate_args);
    add_named(ablate, ablate_args, "--train-manifest", "train_manifest", "Training manifest");
    add_named(ablate, ablate_args, "--test-manifest", "test_manifest", "Evaluation manifest");
    add_named(ablate, ablate_args, "-o,--out", "output_dir", "Output directory");
    add_named(ablate, ablate_args, "--epochs", "epochs", "Number of epochs per variant");
    add_named(ablate, ablate_args, "--seed", "seed", "Random seed");
    ablate->add_flag("-q,--quiet", ablate_quiet, "Suppress per-iteration output");

    // predict
    std::string predict_checkpoint, predict_image, predict_output;
    std::optional<std::string> predict_variant, predict_preview;
    auto* predict = app.add_subcommand("predict", "Predict the alpha matte of one image");
    predict->add_option("--checkpoint", predict_checkpoint, "Checkpoint file")->required();
    predict->add_option("-i,--image", predict_image, "Input image")->required();
    predict->add_option("-o,--output", predict_output, "Output alpha PNG")->required();
    predict->add_option("--variant", predict_variant, "Require the checkpoint to hold this variant");
    predict->add_option("--preview", predict_preview, "Also write an image | alpha | composite preview");

    // report
    std::vector<std::string> report_paths;
    std::optional<std::string> report_plots;
    auto* report = app.add_subcommand("report", "Tabulate metric reports and draw bar charts");
    report->add_option("reports", report_paths, "Report JSON files")->required();
    report->add_option("--plots", report_plots, "Directory for bar chart PNGs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    ConfigPtr cfg;
    RunPtr run;
    msia_run* raw = nullptr;
    msia_status s = MSIA_OK;

    if (synth->parsed()) {
        if (int rc = build_config(synth_args, cfg)) return rc;
        s = msia_synth(cfg.get(), synth_shapes ? 1 : 0, &raw);
        run.reset(raw);
        if (s != MSIA_OK) {
            if (run)
                for (std::size_t i = 0; i < msia_run_output_count(run.get()); ++i)
                    std::fprintf(stderr, "failure report: %s\n", msia_run_output(run.get(), i));
            return fail("synth", s);
        }
    } else if (train->parsed()) {
        if (int rc = build_config(train_args, cfg)) return rc;
        s = msia_train(cfg.get(), print_progress, &train_quiet, &raw);
        run.reset(raw);
        if (s != MSIA_OK) return fail("train", s);
    } else if (eval->parsed()) {
        if (!eval_checkpoint && !eval_predictions) {
            std::fprintf(stderr, "msia eval: one of --checkpoint or --predictions is required\n");
            return kExitInput;
        }
        if (int rc = build_config(eval_args, cfg)) return rc;
        s = msia_eval(cfg.get(), eval_checkpoint ? eval_checkpoint->c_str() : nullptr,
                      eval_predictions ? eval_predictions->c_str() : nullptr,
                      eval_report ? eval_report->c_str() : nullptr, eval_allow_missing ? 1 : 0, &raw);
        run.reset(raw);
        if (s != MSIA_OK) return fail("eval", s);
    } else if (ablate->parsed()) {
        if (int rc = build_config(ablate_args, cfg)) return rc;
        s = msia_ablate(cfg.get(), print_progress, &ablate_quiet, &raw);
        run.reset(raw);
        if (s != MSIA_OK) return fail("ablate", s);
    } else if (predict->parsed()) {
        s = msia_predict_file(predict_checkpoint.c_str(), predict_image.c_str(), predict_output.c_str(),
                              predict_variant ? predict_variant->c_str() : nullptr,
                              predict_preview ? predict_preview->c_str() : nullptr);
        if (s != MSIA_OK) return fail("predict", s);
        std::printf("wrote %s\n", predict_output.c_str());
        if (predict_preview) std::printf("wrote %s\n", predict_preview->c_str());
        return kExitOk;
    } else if (report->parsed()) {
        std::vector<const char*> paths;
        for (const auto& p : report_paths) paths.push_back(p.c_str());
        s = msia_report(paths.data(), paths.size(), report_plots ? report_plots->c_str() : nullptr, &raw);
        run.reset(raw);
        if (s != MSIA_OK) return fail("report", s);
    }
    print_run(run.get());
    return kExitOk;
}
