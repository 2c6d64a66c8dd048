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

#include "metrics/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/errors.hpp"
#include "core/manifest.hpp"

namespace msia::metrics {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

ojson metrics_row(const ImageMetrics& m, bool with_id) {
    ojson j;
    if (with_id) j["id"] = m.id;
    j["sad"] = m.sad;
    j["mse"] = m.mse;
    j["gradient"] = m.gradient;
    j["connectivity"] = m.connectivity;
    return j;
}

ImageMetrics row_from_json(const ojson& j, bool with_id) {
    ImageMetrics m;
    if (with_id) m.id = j.at("id").get<std::string>();
    m.sad = j.at("sad").get<double>();
    m.mse = j.at("mse").get<double>();
    m.gradient = j.at("gradient").get<double>();
    m.connectivity = j.at("connectivity").get<double>();
    return m;
}

void diff_into(const ojson& a, const ojson& b, const std::string& prefix, std::vector<std::string>& out) {
    if (a.is_object() && b.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
            if (!b.contains(it.key()))
                out.push_back(key);
            else
                diff_into(it.value(), b.at(it.key()), key, out);
        }
        for (auto it = b.begin(); it != b.end(); ++it)
            if (!a.contains(it.key())) out.push_back(prefix.empty() ? it.key() : prefix + "." + it.key());
        return;
    }
    if (a != b) out.push_back(prefix.empty() ? "<root>" : prefix);
}

constexpr std::array<const char*, 4> kVariantOrder = {"baseline", "inist", "inist_sedst", "full"};

int variant_rank(const std::string& v) {
    for (std::size_t i = 0; i < kVariantOrder.size(); ++i)
        if (v == kVariantOrder[i]) return static_cast<int>(i);
    return -1;
}

std::string row_name(const MetricsReport& r, std::size_t index) {
    if (!r.label.empty()) return r.label;
    if (r.variant) return *r.variant;
    return fmt::format("report {}", index + 1);
}

}  // namespace

nlohmann::ordered_json metric_header() {
    ojson h;
    h["schema"] = kSchemaVersion;
    h["region"] = "full image";
    h["metrics"] = {
        {"sad", "sum over pixels of |pred - gt|, divided by sum_scale"},
        {"mse", "mean over pixels of (pred - gt)^2"},
        {"gradient",
         "sum over pixels of (|grad pred| - |grad gt|)^2 with first-order Gaussian derivative filters "
         "(replicate border), divided by sum_scale"},
        {"connectivity",
         "sum over pixels of |phi(pred) - phi(gt)|, phi = 1 - d * (d >= theta), d = alpha - l, l the last "
         "threshold at which the pixel belongs to the largest 4-connected region of (pred >= t) & (gt >= t); "
         "divided by sum_scale"},
    };
    h["scaling"] = {{"sum_scale", kSumScale}, {"mse_scale", 1.0}};
    h["gradient_sigma"] = kGradientSigma;
    h["connectivity_theta"] = kConnectivityTheta;
    h["connectivity_step"] = kConnectivityStep;
    h["connectivity_neighbourhood"] = 4;
    return h;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
    ojson doc;
    doc["header"] = metric_header();
    doc["label"] = report.label;
    doc["variant"] = report.variant ? ojson(*report.variant) : ojson(nullptr);
    doc["count"] = report.images.size();
    doc["means"] = metrics_row(report.means, false);
    doc["missing"] = report.missing;
    ojson rows = ojson::array();
    for (const auto& m : report.images) rows.push_back(metrics_row(m, true));
    doc["images"] = std::move(rows);
    return doc;
}

MetricsReport report_from_json(const nlohmann::ordered_json& doc, const std::string& source) {
    try {
        const auto diffs = header_differences(metric_header(), doc.at("header"));
        if (!diffs.empty()) {
            std::string keys;
            for (const auto& d : diffs) keys += (keys.empty() ? "" : ", ") + d;
            throw ConfigError(fmt::format("{}: metric header differs in: {}", source, keys));
        }
        MetricsReport r;
        r.label = doc.value("label", std::string{});
        if (doc.contains("variant") && !doc.at("variant").is_null()) r.variant = doc.at("variant").get<std::string>();
        for (const auto& row : doc.at("images")) r.images.push_back(row_from_json(row, true));
        if (doc.contains("missing")) r.missing = doc.at("missing").get<std::vector<std::string>>();
        r.means = row_from_json(doc.at("means"), false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: malformed metrics report: {}", source, e.what()));
    }
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
    write_file_atomic(path, to_json(report).dump(2) + "\n");
}

MetricsReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open report {}", path.string()));
    ojson doc;
    try {
        doc = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
    return report_from_json(doc, path.string());
}

std::vector<std::string> header_differences(const nlohmann::ordered_json& a, const nlohmann::ordered_json& b) {
    std::vector<std::string> out;
    diff_into(a, b, "", out);
    return out;
}

std::string render_table(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw ConfigError("report: at least one metrics report is required");
    std::vector<std::size_t> order(reports.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const bool ablation = std::all_of(reports.begin(), reports.end(), [](const MetricsReport& r) {
        return r.variant && variant_rank(*r.variant) >= 0;
    });
    if (ablation)
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return variant_rank(*reports[a].variant) < variant_rank(*reports[b].variant);
        });

    std::size_t name_w = 6;
    for (std::size_t i = 0; i < reports.size(); ++i) name_w = std::max(name_w, row_name(reports[i], i).size());

    std::ostringstream os;
    if (ablation) {
        os << fmt::format("{:<{}}  {:^5}  {:^5}  {:^5}", "Method", name_w, "IniST", "SedST", "AI");
    } else {
        os << fmt::format("{:<{}}", "Method", name_w);
    }
    os << fmt::format("  {:>10}  {:>10}  {:>10}  {:>12}\n", "SAD", "MSE", "Gradient", "Connectivity");
    for (std::size_t idx : order) {
        const auto& r = reports[idx];
        os << fmt::format("{:<{}}", row_name(r, idx), name_w);
        if (ablation) {
            const int rank = variant_rank(*r.variant);
            auto mark = [](bool on) { return on ? "x" : "-"; };
            os << fmt::format("  {:^5}  {:^5}  {:^5}", mark(rank >= 1), mark(rank >= 2), mark(rank >= 3));
        }
        os << fmt::format("  {:>10.4f}  {:>10.6f}  {:>10.4f}  {:>12.4f}\n", r.means.sad, r.means.mse,
                          r.means.gradient, r.means.connectivity);
    }
    return os.str();
}

std::vector<std::filesystem::path> write_bar_plots(const std::filesystem::path& dir,
                                                   const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw ConfigError("report: at least one metrics report is required");
    std::filesystem::create_directories(dir);
    struct Column {
        const char* key;
        double ImageMetrics::*field;
    };
    const std::array<Column, 4> columns = {{{"sad", &ImageMetrics::sad},
                                            {"mse", &ImageMetrics::mse},
                                            {"gradient", &ImageMetrics::gradient},
                                            {"connectivity", &ImageMetrics::connectivity}}};
    const int bar_w = 80, gap = 30, height = 320, top = 40, bottom = 60;
    const int width = gap + static_cast<int>(reports.size()) * (bar_w + gap);
    std::vector<std::filesystem::path> written;
    for (const auto& col : columns) {
        cv::Mat canvas(height, std::max(width, 240), CV_8UC3, cv::Scalar(255, 255, 255));
        double vmax = 0.0;
        for (const auto& r : reports) vmax = std::max(vmax, r.means.*col.field);
        if (vmax <= 0.0) vmax = 1.0;
        cv::putText(canvas, col.key, {gap, 24}, cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(0, 0, 0), 1, cv::LINE_8);
        const int plot_h = height - top - bottom;
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const double v = reports[i].means.*col.field;
            const int x0 = gap + static_cast<int>(i) * (bar_w + gap);
            const int bh = static_cast<int>(plot_h * (v / vmax) + 0.5);
            cv::rectangle(canvas, {x0, top + plot_h - bh}, {x0 + bar_w, top + plot_h}, cv::Scalar(180, 110, 40),
                          cv::FILLED, cv::LINE_8);
            cv::putText(canvas, fmt::format("{:.4g}", v), {x0, top + plot_h - bh - 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                        cv::Scalar(0, 0, 0), 1, cv::LINE_8);
            std::string name = row_name(reports[i], i);
            if (name.size() > 12) name = name.substr(0, 12);
            cv::putText(canvas, name, {x0, height - bottom + 20}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0, 0, 0),
                        1, cv::LINE_8);
        }
        const auto path = dir / (std::string(col.key) + ".png");
        if (!cv::imwrite(path.string(), canvas)) throw IoError(fmt::format("cannot write plot {}", path.string()));
        written.push_back(path);
    }
    return written;
}

}  // namespace msia::metrics
