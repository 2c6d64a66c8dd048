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

#include "trainer/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "core/errors.hpp"

namespace msia::trainer {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

struct Field {
    std::function<void(TrainingConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const TrainingConfig&)> get;
};

template <typename T>
Field number_field(T TrainingConfig::*member) {
    return {[member](TrainingConfig& c, const std::string& k, const std::string& v) {
                c.*member = parse_number<T>(k, v);
            },
            [member](const TrainingConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt_double(c.*member);
                else
                    return std::to_string(c.*member);
            }};
}

Field string_field(std::string TrainingConfig::*member) {
    return {[member](TrainingConfig& c, const std::string&, const std::string& v) { c.*member = v; },
            [member](const TrainingConfig& c) { return c.*member; }};
}

const std::vector<std::pair<std::string, Field>>& schema() {
    static const std::vector<std::pair<std::string, Field>> fields = [] {
        std::vector<std::pair<std::string, Field>> f;
        f.emplace_back("lr0", number_field(&TrainingConfig::lr0));
        f.emplace_back("momentum", number_field(&TrainingConfig::momentum));
        f.emplace_back("weight_decay", number_field(&TrainingConfig::weight_decay));
        f.emplace_back("poly_power", number_field(&TrainingConfig::poly_power));
        f.emplace_back("epochs", number_field(&TrainingConfig::epochs));
        f.emplace_back("batch_size", number_field(&TrainingConfig::batch_size));
        f.emplace_back("crop_sizes",
                       Field{[](TrainingConfig& c, const std::string& k, const std::string& v) {
                                 std::vector<int> sizes;
                                 std::stringstream ss(v);
                                 std::string item;
                                 while (std::getline(ss, item, ',')) sizes.push_back(parse_number<int>(k, trim(item)));
                                 if (sizes.empty()) throw ConfigError("config key 'crop_sizes': empty list");
                                 c.crop_sizes = std::move(sizes);
                             },
                             [](const TrainingConfig& c) {
                                 std::string out;
                                 for (std::size_t i = 0; i < c.crop_sizes.size(); ++i)
                                     out += (i ? "," : "") + std::to_string(c.crop_sizes[i]);
                                 return out;
                             }});
        f.emplace_back("target_size", number_field(&TrainingConfig::target_size));
        f.emplace_back("flip_prob", number_field(&TrainingConfig::flip_prob));
        f.emplace_back("seed", number_field(&TrainingConfig::seed));
        f.emplace_back("profile", Field{[](TrainingConfig& c, const std::string&, const std::string& v) {
                                            c.model.profile = model::parse_profile(v);
                                        },
                                        [](const TrainingConfig& c) { return model::to_string(c.model.profile); }});
        f.emplace_back("variant", Field{[](TrainingConfig& c, const std::string&, const std::string& v) {
                                            c.model.variant = model::parse_variant(v);
                                        },
                                        [](const TrainingConfig& c) { return model::to_string(c.model.variant); }});
        f.emplace_back("assembly_epsilon",
                       Field{[](TrainingConfig& c, const std::string& k, const std::string& v) {
                                 c.model.epsilon = parse_number<double>(k, v);
                             },
                             [](const TrainingConfig& c) { return fmt_double(c.model.epsilon); }});
        f.emplace_back("ssim_global", Field{[](TrainingConfig& c, const std::string& k, const std::string& v) {
                                                c.ssim_global = parse_bool(k, v);
                                            },
                                            [](const TrainingConfig& c) {
                                                return std::string(c.ssim_global ? "true" : "false");
                                            }});
        f.emplace_back("train_manifest", string_field(&TrainingConfig::train_manifest));
        f.emplace_back("test_manifest", string_field(&TrainingConfig::test_manifest));
        f.emplace_back("output_dir", string_field(&TrainingConfig::output_dir));
        f.emplace_back("checkpoint_every", number_field(&TrainingConfig::checkpoint_every));
        f.emplace_back("eval_every", number_field(&TrainingConfig::eval_every));
        f.emplace_back("fg_dir", string_field(&TrainingConfig::fg_dir));
        f.emplace_back("alpha_dir", string_field(&TrainingConfig::alpha_dir));
        f.emplace_back("bg_dir", string_field(&TrainingConfig::bg_dir));
        f.emplace_back("data_dir", string_field(&TrainingConfig::data_dir));
        f.emplace_back("split", string_field(&TrainingConfig::split));
        f.emplace_back("per_fg", number_field(&TrainingConfig::per_fg));
        f.emplace_back("shape_fg_count", number_field(&TrainingConfig::shape_fg_count));
        f.emplace_back("shape_bg_count", number_field(&TrainingConfig::shape_bg_count));
        f.emplace_back("shape_size", number_field(&TrainingConfig::shape_size));
        return f;
    }();
    return fields;
}

const Field& field(const std::string& key) {
    for (const auto& [name, f] : schema())
        if (name == key) return f;
    throw ConfigError(fmt::format("unknown config key '{}'", key));
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, f] : schema()) k.push_back(name);
        return k;
    }();
    return keys;
}

void set_value(TrainingConfig& cfg, const std::string& key, const std::string& value) {
    try {
        field(key).set(cfg, key, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

std::string get_value(const TrainingConfig& cfg, const std::string& key) { return field(key).get(cfg); }

TrainingConfig parse_config(const std::string& text, const std::string& source) {
    TrainingConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source, line_no));
        try {
            set_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
        }
    }
    return cfg;
}

TrainingConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void apply_overrides(TrainingConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("override '{}' is not of the form key=value", o));
        set_value(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
}

void validate(const TrainingConfig& cfg) {
    auto positive = [](const char* key, double v) {
        if (!(v > 0.0)) throw ConfigError(fmt::format("config key '{}' must be positive, got {}", key, v));
    };
    positive("lr0", cfg.lr0);
    positive("momentum", cfg.momentum);
    positive("weight_decay", cfg.weight_decay);
    positive("poly_power", cfg.poly_power);
    positive("batch_size", cfg.batch_size);
    positive("target_size", cfg.target_size);
    positive("per_fg", cfg.per_fg);
    positive("assembly_epsilon", cfg.model.epsilon);
    if (cfg.momentum >= 1.0) throw ConfigError(fmt::format("config key 'momentum' must be < 1, got {}", cfg.momentum));
    if (cfg.epochs < 0) throw ConfigError(fmt::format("config key 'epochs' must be ≥ 0, got {}", cfg.epochs));
    if (cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0)
        throw ConfigError(fmt::format("config key 'flip_prob' must be in [0,1], got {}", cfg.flip_prob));
    if (cfg.target_size % 32 != 0)
        throw ConfigError(fmt::format("config key 'target_size' must be a multiple of 32, got {}", cfg.target_size));
    for (int c : cfg.crop_sizes)
        if (c < cfg.target_size)
            throw ConfigError(fmt::format("crop size {} is smaller than target_size {}", c, cfg.target_size));
    if (cfg.checkpoint_every < 0 || cfg.eval_every < 0)
        throw ConfigError("checkpoint_every and eval_every must be ≥ 0");
}

std::string to_text(const TrainingConfig& cfg) {
    std::string out;
    for (const auto& [name, f] : schema()) out += fmt::format("{} = {}\n", name, f.get(cfg));
    return out;
}

nlohmann::json to_json(const TrainingConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, f] : schema()) j[name] = f.get(cfg);
    return j;
}

std::filesystem::path resolve_output_path(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* root = std::getenv("MSIA_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / p;
    }
    return p;
}

}  // namespace msia::trainer
