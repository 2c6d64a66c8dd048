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
#include <span>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/manifest.hpp"

namespace msia {

/// I = αF + (1−α)B per pixel and channel. Throws ShapeError on mismatched dims.
ImageRGB composite(const ImageRGB& fg, const ImageRGB& bg, const AlphaMatte& alpha);

/// Scales `bg` (aspect preserved) until it covers height × width, then
/// center-crops to exactly that size.
ImageRGB fit_background(const ImageRGB& bg, int height, int width);

struct ForegroundAsset {
    std::string id;
    std::filesystem::path image;
    std::filesystem::path alpha;
};

struct BackgroundAsset {
    std::string id;
    std::filesystem::path image;
};

/// Pairs every image in `fg_dir` with the alpha of the same stem in
/// `alpha_dir`, sorted by id. A missing alpha is kept (with the expected
/// path) so the failure is reported per record. Missing directories throw IoError.
std::vector<ForegroundAsset> discover_foregrounds(const std::filesystem::path& fg_dir,
                                                  const std::filesystem::path& alpha_dir);
std::vector<BackgroundAsset> discover_backgrounds(const std::filesystem::path& bg_dir);

struct SynthesisOptions {
    int per_fg = 1;
    std::uint64_t seed = 0;
    std::string split = "train";
    std::filesystem::path out_dir;
};

/// A draw decided before any pixel work happens.
struct PlannedComposite {
    std::size_t fg_index = 0;
    std::size_t bg_index = 0;
    int draw = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const PlannedComposite&, const PlannedComposite&) = default;
};

/// Deterministic background assignment: per_fg draws per foreground, each
/// with its own seed derived from (seed, fg_index, draw).
std::vector<PlannedComposite> plan_split(std::size_t fg_count, std::size_t bg_count, int per_fg,
                                         std::uint64_t seed);

struct RecordError {
    std::string fg_id;
    std::string bg_id;
    std::string message;
};

struct SynthesisReport {
    std::vector<ManifestRecord> records;
    std::filesystem::path manifest_path;
    std::filesystem::path failure_report_path;
    std::vector<RecordError> errors;

    bool ok() const { return errors.empty(); }
};

/// Renders every planned composite, writes composites and quantised alphas
/// under out_dir/<split>/ and the manifest as out_dir/<split>.jsonl. When any
/// record fails the manifest is not written; a JSON failure report is
/// written instead and listed in the returned report.
SynthesisReport synthesize_split(std::span<const ForegroundAsset> foregrounds,
                                 std::span<const BackgroundAsset> backgrounds,
                                 const SynthesisOptions& options);

/// SplitMix64 finaliser; used to derive independent per-record seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace msia
