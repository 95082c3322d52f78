#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fraxnet/augment.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/training.hpp"

namespace fraxnet {

struct DataConfig {
    std::filesystem::path root;
    double train_fraction = 0.8;
    double val_fraction = 0.1;  // share of the training portion
    std::uint64_t seed = 7;
};

/// Everything a CLI run needs, read from a flat `key = value` file.
struct RunConfig {
    DataConfig data;
    ModelConfig model;
    OptimConfig optim;
    TrainConfig train;
    AugmentConfig augment;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <typename U>
U parse_number(std::string_view key, std::string_view text)
{
    U v{};
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end)
        throw ConfigError("'" + std::string(key) + "': cannot parse '" + std::string(text) + "' as a number");
    return v;
}

inline bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("'" + std::string(key) + "': expected true or false, got '" + std::string(text) + "'");
}

inline std::vector<std::size_t> parse_list(std::string_view key, std::string_view text)
{
    std::vector<std::size_t> out;
    if (trim(text).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(parse_number<std::size_t>(key, trim(text.substr(start, comma - start))));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

// Block-wide settings are collected first and expanded once all keys are read.
struct PendingBlocks {
    std::size_t blocks = 3;
    std::vector<std::size_t> filters{32, 64, 128};
    std::size_t kernel = 3;
    std::size_t pool = 2;
    double conv_dropout = 0.25;
};

}  // namespace detail

/// Keys accepted in a run config file, with their defaults.
inline const std::vector<std::pair<std::string, std::string>>& config_keys()
{
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"data.root", ""},
        {"data.train_fraction", "0.8"},
        {"data.val_fraction", "0.1"},
        {"data.seed", "7"},
        {"model.input_height", "128"},
        {"model.input_width", "128"},
        {"model.input_channels", "1"},
        {"model.blocks", "3"},
        {"model.filters", "32,64,128"},
        {"model.kernel", "3"},
        {"model.pool", "2"},
        {"model.conv_dropout", "0.25"},
        {"model.dense_units", "128"},
        {"model.dense_dropout", "0.5"},
        {"model.bn_momentum", "0.99"},
        {"model.bn_epsilon", "0.001"},
        {"model.seed", "42"},
        {"optim.lr", "0.001"},
        {"optim.beta1", "0.9"},
        {"optim.beta2", "0.999"},
        {"optim.epsilon", "1e-7"},
        {"optim.plateau_factor", "0.1"},
        {"optim.plateau_patience", "5"},
        {"optim.plateau_min_delta", "0.0001"},
        {"optim.min_lr", "1e-6"},
        {"optim.positive_class_weight", "1"},
        {"train.epochs", "30"},
        {"train.batch_size", "32"},
        {"train.early_stop_patience", "10"},
        {"train.early_stop_min_delta", "0.0001"},
        {"train.threshold", "0.5"},
        {"train.shuffle_seed", "1"},
        {"train.augment_seed", "2"},
        {"train.dropout_seed", "3"},
        {"augment.enabled", "true"},
        {"augment.rotation", "15"},
        {"augment.zoom_low", "0.9"},
        {"augment.zoom_high", "1.1"},
        {"augment.flip", "0.5"},
        {"augment.oversample_minority", "false"},
    };
    return keys;
}

/// Parses config text. Blank lines and `#` comments are ignored; unknown keys,
/// repeated keys and malformed values are ConfigErrors naming the line.
/// `overrides` are extra `key=value` entries applied after the text; each may
/// replace a value from the text but not another override.
inline RunConfig parse_config(std::string_view text, std::span<const std::string> overrides = {})
{
    using detail::parse_number;
    RunConfig c;
    detail::PendingBlocks blocks;
    const std::map<std::string, detail::Setter, std::less<>> set = {
        {"data.root", [](RunConfig& c, std::string_view v) { c.data.root = std::string(v); }},
        {"data.train_fraction", [](RunConfig& c, std::string_view v) { c.data.train_fraction = parse_number<double>("data.train_fraction", v); }},
        {"data.val_fraction", [](RunConfig& c, std::string_view v) { c.data.val_fraction = parse_number<double>("data.val_fraction", v); }},
        {"data.seed", [](RunConfig& c, std::string_view v) { c.data.seed = parse_number<std::uint64_t>("data.seed", v); }},
        {"model.input_height", [](RunConfig& c, std::string_view v) { c.model.input_height = parse_number<std::size_t>("model.input_height", v); }},
        {"model.input_width", [](RunConfig& c, std::string_view v) { c.model.input_width = parse_number<std::size_t>("model.input_width", v); }},
        {"model.input_channels", [](RunConfig& c, std::string_view v) { c.model.input_channels = parse_number<std::size_t>("model.input_channels", v); }},
        {"model.blocks", [&](RunConfig&, std::string_view v) { blocks.blocks = parse_number<std::size_t>("model.blocks", v); }},
        {"model.filters", [&](RunConfig&, std::string_view v) { blocks.filters = detail::parse_list("model.filters", v); }},
        {"model.kernel", [&](RunConfig&, std::string_view v) { blocks.kernel = parse_number<std::size_t>("model.kernel", v); }},
        {"model.pool", [&](RunConfig&, std::string_view v) { blocks.pool = parse_number<std::size_t>("model.pool", v); }},
        {"model.conv_dropout", [&](RunConfig&, std::string_view v) { blocks.conv_dropout = parse_number<double>("model.conv_dropout", v); }},
        {"model.dense_units", [](RunConfig& c, std::string_view v) { c.model.dense_units = detail::parse_list("model.dense_units", v); }},
        {"model.dense_dropout", [](RunConfig& c, std::string_view v) { c.model.dense_dropout = parse_number<double>("model.dense_dropout", v); }},
        {"model.bn_momentum", [](RunConfig& c, std::string_view v) { c.model.bn_momentum = parse_number<double>("model.bn_momentum", v); }},
        {"model.bn_epsilon", [](RunConfig& c, std::string_view v) { c.model.bn_epsilon = parse_number<double>("model.bn_epsilon", v); }},
        {"model.seed", [](RunConfig& c, std::string_view v) { c.model.seed = parse_number<std::uint64_t>("model.seed", v); }},
        {"optim.lr", [](RunConfig& c, std::string_view v) { c.optim.adam.lr = parse_number<double>("optim.lr", v); }},
        {"optim.beta1", [](RunConfig& c, std::string_view v) { c.optim.adam.beta1 = parse_number<double>("optim.beta1", v); }},
        {"optim.beta2", [](RunConfig& c, std::string_view v) { c.optim.adam.beta2 = parse_number<double>("optim.beta2", v); }},
        {"optim.epsilon", [](RunConfig& c, std::string_view v) { c.optim.adam.epsilon = parse_number<double>("optim.epsilon", v); }},
        {"optim.plateau_factor", [](RunConfig& c, std::string_view v) { c.optim.plateau_factor = parse_number<double>("optim.plateau_factor", v); }},
        {"optim.plateau_patience", [](RunConfig& c, std::string_view v) { c.optim.plateau_patience = parse_number<std::size_t>("optim.plateau_patience", v); }},
        {"optim.plateau_min_delta", [](RunConfig& c, std::string_view v) { c.optim.plateau_min_delta = parse_number<double>("optim.plateau_min_delta", v); }},
        {"optim.min_lr", [](RunConfig& c, std::string_view v) { c.optim.min_lr = parse_number<double>("optim.min_lr", v); }},
        {"optim.positive_class_weight", [](RunConfig& c, std::string_view v) { c.optim.positive_class_weight = parse_number<double>("optim.positive_class_weight", v); }},
        {"train.epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = parse_number<std::size_t>("train.epochs", v); }},
        {"train.batch_size", [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_number<std::size_t>("train.batch_size", v); }},
        {"train.early_stop_patience", [](RunConfig& c, std::string_view v) { c.train.early_stop_patience = parse_number<std::size_t>("train.early_stop_patience", v); }},
        {"train.early_stop_min_delta", [](RunConfig& c, std::string_view v) { c.train.early_stop_min_delta = parse_number<double>("train.early_stop_min_delta", v); }},
        {"train.threshold", [](RunConfig& c, std::string_view v) { c.train.threshold = parse_number<double>("train.threshold", v); }},
        {"train.shuffle_seed", [](RunConfig& c, std::string_view v) { c.train.seeds.shuffle = parse_number<std::uint64_t>("train.shuffle_seed", v); }},
        {"train.augment_seed", [](RunConfig& c, std::string_view v) { c.train.seeds.augment = parse_number<std::uint64_t>("train.augment_seed", v); }},
        {"train.dropout_seed", [](RunConfig& c, std::string_view v) { c.train.seeds.dropout = parse_number<std::uint64_t>("train.dropout_seed", v); }},
        {"augment.enabled", [](RunConfig& c, std::string_view v) { c.augment.enabled = detail::parse_bool("augment.enabled", v); }},
        {"augment.rotation", [](RunConfig& c, std::string_view v) { c.augment.rotation_max_degrees = parse_number<double>("augment.rotation", v); }},
        {"augment.zoom_low", [](RunConfig& c, std::string_view v) { c.augment.zoom_low = parse_number<double>("augment.zoom_low", v); }},
        {"augment.zoom_high", [](RunConfig& c, std::string_view v) { c.augment.zoom_high = parse_number<double>("augment.zoom_high", v); }},
        {"augment.flip", [](RunConfig& c, std::string_view v) { c.augment.horizontal_flip_prob = parse_number<double>("augment.flip", v); }},
        {"augment.oversample_minority", [](RunConfig& c, std::string_view v) { c.train.oversample_minority = detail::parse_bool("augment.oversample_minority", v); }},
    };

    auto assign = [&](std::string_view key, std::string_view value, const std::string& where) {
        const auto it = set.find(key);
        if (it == set.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        try {
            it->second(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    };

    std::map<std::string, std::size_t, std::less<>> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        if (const auto prev = seen.find(key); prev != seen.end())
            throw ConfigError(where + "key '" + std::string(key) + "' already set on line " +
                              std::to_string(prev->second));
        assign(key, detail::trim(line.substr(eq + 1)), where);
        seen.emplace(std::string(key), line_no);
    }

    std::set<std::string, std::less<>> overridden;
    for (const auto& o : overrides) {
        const auto where = "override '" + o + "': ";
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
        const auto key = detail::trim(std::string_view(o).substr(0, eq));
        if (!overridden.emplace(key).second) throw ConfigError(where + "key given more than once");
        assign(key, detail::trim(std::string_view(o).substr(eq + 1)), where);
    }

    if (blocks.filters.size() != blocks.blocks)
        throw ConfigError("model.blocks is " + std::to_string(blocks.blocks) + " but model.filters lists " +
                          std::to_string(blocks.filters.size()) + " widths");
    c.model.blocks.clear();
    for (auto f : blocks.filters) c.model.blocks.push_back({f, blocks.kernel, blocks.pool, blocks.conv_dropout});

    try {
        c.model.validate();
        c.train.validate();
        if (c.augment.enabled) c.augment.validate();
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
    if (!(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0))
        throw ConfigError("data.train_fraction must lie in (0,1)");
    if (!(c.data.val_fraction >= 0.0 && c.data.val_fraction < 1.0))
        throw ConfigError("data.val_fraction must lie in [0,1)");
    if (!(c.optim.adam.lr > 0.0)) throw ConfigError("optim.lr must be positive");
    if (!(c.optim.positive_class_weight > 0.0)) throw ConfigError("optim.positive_class_weight must be positive");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {})
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str(), overrides);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace fraxnet
