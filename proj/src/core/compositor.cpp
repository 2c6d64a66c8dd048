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

#include "core/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/core.h>
#include <json.hpp>

#include "core/errors.hpp"

namespace msia {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    static const std::set<std::string> kExt = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return kExt.count(ext) > 0;
}

std::vector<fs::path> list_images(const fs::path& dir, const char* role) {
    if (!fs::is_directory(dir)) throw IoError(fmt::format("{} directory '{}' does not exist", role, dir.string()));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

ImageRGB composite(const ImageRGB& fg, const ImageRGB& bg, const AlphaMatte& alpha) {
    require_same_dims(fg, bg, "composite: foreground/background");
    require_same_dims(fg, alpha, "composite: foreground/alpha");
    ImageRGB out(fg.height(), fg.width());
    for (int y = 0; y < fg.height(); ++y) {
        for (int x = 0; x < fg.width(); ++x) {
            const double a = alpha.at(y, x);
            for (int c = 0; c < 3; ++c) {
                const double f = fg.at(y, x, c);
                const double b = bg.at(y, x, c);
                // Exact endpoints: α ∈ {0,1} must reproduce the layer bit-for-bit.
                double v = a == 1.0 ? f : a == 0.0 ? b : b + a * (f - b);
                out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

ImageRGB fit_background(const ImageRGB& bg, int height, int width) {
    if (bg.height() == height && bg.width() == width) return bg;
    const double scale = std::max(static_cast<double>(height) / bg.height(), static_cast<double>(width) / bg.width());
    const int sh = std::max(height, static_cast<int>(std::ceil(bg.height() * scale - 1e-9)));
    const int sw = std::max(width, static_cast<int>(std::ceil(bg.width() * scale - 1e-9)));
    ImageRGB scaled = resize_bicubic(bg, sh, sw);
    return crop(scaled, (sh - height) / 2, (sw - width) / 2, height, width);
}

std::vector<ForegroundAsset> discover_foregrounds(const fs::path& fg_dir, const fs::path& alpha_dir) {
    const auto fgs = list_images(fg_dir, "foreground");
    if (!fs::is_directory(alpha_dir))
        throw IoError(fmt::format("alpha directory '{}' does not exist", alpha_dir.string()));
    std::vector<ForegroundAsset> out;
    for (const auto& f : fgs) {
        ForegroundAsset a{f.stem().string(), f, alpha_dir / f.filename()};
        if (!fs::exists(a.alpha)) {
            fs::path png = alpha_dir / (f.stem().string() + ".png");
            if (fs::exists(png)) a.alpha = png;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<BackgroundAsset> discover_backgrounds(const fs::path& bg_dir) {
    std::vector<BackgroundAsset> out;
    for (const auto& f : list_images(bg_dir, "background")) out.push_back({f.stem().string(), f});
    return out;
}

std::vector<PlannedComposite> plan_split(std::size_t fg_count, std::size_t bg_count, int per_fg,
                                         std::uint64_t seed) {
    if (per_fg < 1) throw ConfigError(fmt::format("per_fg must be >= 1, got {}", per_fg));
    if (bg_count == 0) throw ConfigError("background pool is empty");
    std::vector<PlannedComposite> plan;
    plan.reserve(fg_count * static_cast<std::size_t>(per_fg));
    for (std::size_t f = 0; f < fg_count; ++f) {
        for (int k = 0; k < per_fg; ++k) {
            const std::uint64_t record_seed = mix_seed(mix_seed(seed, f), static_cast<std::uint64_t>(k));
            std::mt19937_64 rng(record_seed);
            std::uniform_int_distribution<std::size_t> pick(0, bg_count - 1);
            plan.push_back({f, pick(rng), k, record_seed});
        }
    }
    return plan;
}

SynthesisReport synthesize_split(std::span<const ForegroundAsset> foregrounds,
                                 std::span<const BackgroundAsset> backgrounds,
                                 const SynthesisOptions& options) {
    if (options.out_dir.empty()) throw ConfigError("synthesis output directory is not set");
    if (options.split.empty()) throw ConfigError("split tag is empty");
    if (foregrounds.empty()) throw IoError("no foreground images found");
    const auto plan = plan_split(foregrounds.size(), backgrounds.size(), options.per_fg, options.seed);

    SynthesisReport report;
    const fs::path split_dir = options.out_dir / options.split;
    const fs::path alpha_rel = fs::path(options.split) / "alphas";
    const fs::path comp_rel = fs::path(options.split) / "composites";

    std::size_t i = 0;
    while (i < plan.size()) {
        const std::size_t f = plan[i].fg_index;
        const ForegroundAsset& fg_asset = foregrounds[f];
        const std::size_t group_end = i + static_cast<std::size_t>(options.per_fg);

        ImageRGB fg;
        AlphaMatte alpha;
        std::string fg_error;
        try {
            std::tie(fg, alpha) = load_pair(fg_asset.image, fg_asset.alpha);
        } catch (const Error& e) {
            fg_error = e.what();
        }

        const std::string alpha_name = (alpha_rel / (fg_asset.id + ".png")).generic_string();
        if (fg_error.empty()) {
            try {
                save_alpha(options.out_dir / alpha_name, alpha);
            } catch (const Error& e) {
                fg_error = e.what();
            }
        }

        for (; i < group_end; ++i) {
            const PlannedComposite& p = plan[i];
            const BackgroundAsset& bg_asset = backgrounds[p.bg_index];
            if (!fg_error.empty()) {
                report.errors.push_back({fg_asset.id, bg_asset.id, fg_error});
                continue;
            }
            try {
                const ImageRGB bg = fit_background(load_image_rgb(bg_asset.image), fg.height(), fg.width());
                const ImageRGB out = composite(fg, bg, alpha);
                const std::string comp_name =
                    (comp_rel / fmt::format("{}_{:04d}.png", fg_asset.id, p.draw)).generic_string();
                save_image_rgb(options.out_dir / comp_name, out);
                report.records.push_back({comp_name, alpha_name, fg_asset.id, bg_asset.id, p.seed, options.split});
            } catch (const Error& e) {
                report.errors.push_back({fg_asset.id, bg_asset.id, e.what()});
            }
        }
    }

    fs::create_directories(split_dir);
    if (report.ok()) {
        report.manifest_path = options.out_dir / (options.split + ".jsonl");
        write_manifest(report.manifest_path, report.records);
    } else {
        // A manifest left over from an earlier run would be mistaken for this one.
        std::error_code ec;
        fs::remove(options.out_dir / (options.split + ".jsonl"), ec);
        nlohmann::ordered_json j;
        j["split"] = options.split;
        j["failed_records"] = report.errors.size();
        j["errors"] = nlohmann::json::array();
        for (const auto& e : report.errors)
            j["errors"].push_back({{"fg_id", e.fg_id}, {"bg_id", e.bg_id}, {"message", e.message}});
        report.failure_report_path = options.out_dir / (options.split + "_failures.json");
        write_file_atomic(report.failure_report_path, j.dump(2) + "\n");
    }
    return report;
}

}  // namespace msia
