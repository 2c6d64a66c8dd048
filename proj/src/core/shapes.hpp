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

#include "core/image.hpp"

namespace msia {

enum class ShapeKind { disc, ring, strands };

/// Anti-aliased synthetic matte with fractional-alpha borders. Discs and
/// rings carry a soft edge a few pixels wide; strands are thin,
/// partially transparent curves attached to a small body.
AlphaMatte render_shape_alpha(int height, int width, ShapeKind kind, std::uint64_t seed);

/// Smooth colored texture (gradient plus low-frequency waves).
ImageRGB render_texture(int height, int width, std::uint64_t seed);

struct ShapeAssetOptions {
    int fg_count = 4;
    int bg_count = 4;
    int size = 128;
    std::uint64_t seed = 0;
};

struct ShapeAssetDirs {
    std::filesystem::path fg_dir;
    std::filesystem::path alpha_dir;
    std::filesystem::path bg_dir;
};

/// Writes fg/, alpha/ and bg/ PNG sets under `root`, ready for
/// discover_foregrounds / discover_backgrounds. Shape kinds cycle through
/// disc, ring, strands.
ShapeAssetDirs generate_shape_assets(const std::filesystem::path& root, const ShapeAssetOptions& options);

}  // namespace msia
