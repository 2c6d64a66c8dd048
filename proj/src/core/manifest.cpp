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

#include "core/manifest.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "core/errors.hpp"

namespace msia {

namespace fs = std::filesystem;

namespace {

const char* const kFields[] = {"composite", "alpha", "fg_id", "bg_id", "seed", "split"};

}  // namespace

std::string manifest_line(const ManifestRecord& r) {
    nlohmann::ordered_json j;
    j["composite"] = r.composite;
    j["alpha"] = r.alpha;
    j["fg_id"] = r.fg_id;
    j["bg_id"] = r.bg_id;
    j["seed"] = r.seed;
    j["split"] = r.split;
    return j.dump();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
        out << contents;
        if (!out) throw IoError(fmt::format("write to {} failed", tmp.string()));
    }
    fs::rename(tmp, path);
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
    std::string text;
    for (const auto& r : records) {
        text += manifest_line(r);
        text += '\n';
    }
    write_file_atomic(path, text);
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open manifest {}", path.string()));
    DatasetManifest manifest;
    manifest.root = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
        if (!j.is_object() || j.size() != std::size(kFields))
            throw IoError(fmt::format("{}:{}: expected exactly the fields composite, alpha, fg_id, bg_id, seed, split",
                                      path.string(), line_no));
        for (const char* f : kFields)
            if (!j.contains(f)) throw IoError(fmt::format("{}:{}: missing field '{}'", path.string(), line_no, f));
        try {
            manifest.records.push_back({j["composite"].get<std::string>(), j["alpha"].get<std::string>(),
                                        j["fg_id"].get<std::string>(), j["bg_id"].get<std::string>(),
                                        j["seed"].get<std::uint64_t>(), j["split"].get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw IoError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return manifest;
}

}  // namespace msia
