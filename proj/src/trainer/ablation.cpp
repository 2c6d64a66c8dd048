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

#include "trainer/ablation.hpp"

#include <json.hpp>

#include "core/manifest.hpp"
#include "metrics/report.hpp"

namespace msia::trainer {

std::vector<std::pair<model::AblationVariant, std::size_t>> variant_parameter_counts(const TrainingConfig& cfg) {
    std::vector<std::pair<model::AblationVariant, std::size_t>> out;
    for (const auto v : model::all_variants()) {
        model::ModelConfig mc = cfg.model;
        mc.variant = v;
        out.emplace_back(v, model::MattingNet(mc, cfg.seed).parameter_count());
    }
    return out;
}

AblationResult ablation_suite(const TrainingConfig& cfg, const TrainHooks& hooks) {
    validate(cfg);
    const std::filesystem::path root = resolve_output_path(cfg.output_dir);
    const std::string eval_manifest = cfg.test_manifest.empty() ? cfg.train_manifest : cfg.test_manifest;
    const DatasetManifest manifest = read_manifest(eval_manifest);

    AblationResult result;
    std::vector<metrics::MetricsReport> reports;
    for (const auto v : model::all_variants()) {
        TrainingConfig vc = cfg;
        vc.model.variant = v;
        vc.output_dir = (root / model::to_string(v)).string();
        TrainResult tr = train(vc, hooks);

        AblationRow row;
        row.variant = v;
        row.parameter_count = tr.net->parameter_count();
        row.checkpoint = tr.final_checkpoint;
        EvalOptions eo;
        eo.label = model::to_string(v);
        row.report = evaluate_model(*tr.net, manifest, eo);
        row.report_path = tr.output_dir / "report.json";
        metrics::write_report(row.report_path, row.report);
        reports.push_back(row.report);
        result.rows.push_back(std::move(row));
    }

    result.table = metrics::render_table(reports);
    result.table_path = root / "ablation_table.txt";
    write_file_atomic(result.table_path, result.table);

    nlohmann::ordered_json summary;
    summary["profile"] = model::to_string(cfg.model.profile);
    summary["seed"] = cfg.seed;
    summary["epochs"] = cfg.epochs;
    summary["eval_manifest"] = eval_manifest;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : result.rows)
        rows.push_back({{"variant", model::to_string(r.variant)},
                        {"parameters", r.parameter_count},
                        {"report", r.report_path.filename().string()},
                        {"sad", r.report.means.sad},
                        {"mse", r.report.means.mse},
                        {"gradient", r.report.means.gradient},
                        {"connectivity", r.report.means.connectivity}});
    summary["rows"] = std::move(rows);
    result.summary_path = root / "ablation.json";
    write_file_atomic(result.summary_path, summary.dump(2) + "\n");
    return result;
}

}  // namespace msia::trainer
