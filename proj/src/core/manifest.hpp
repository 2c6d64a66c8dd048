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
#include <string>
#include <vector>

namespace msia {

/// One composite/ground-truth pair. Paths are relative to the manifest's directory.
struct ManifestRecord {
    std::string composite;
    std::string alpha;
    std::string fg_id;
    std::string bg_id;
    std::uint64_t seed = 0;
    std::string split;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestRecord> records;

    std::filesystem::path composite_path(const ManifestRecord& r) const { return root / r.composite; }
    std::filesystem::path alpha_path(const ManifestRecord& r) const { return root / r.alpha; }
};

/// JSON-lines, one object per record with the fields
/// (composite, alpha, fg_id, bg_id, seed, split) in that order.
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes through a temporary file and renames, so readers never see a
/// partial manifest.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

/// Serialises one record exactly as it appears on a manifest line.
std::string manifest_line(const ManifestRecord& record);

/// Writes `contents` to `path` atomically (temporary sibling + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace msia
