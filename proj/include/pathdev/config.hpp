#pragma once

// Run configuration in flat `key = value` text form, and the hyperparameter
// sweep specification.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathdev/dataset.hpp"
#include "pathdev/lie.hpp"
#include "pathdev/model.hpp"

namespace pathdev {

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    TrainConfig train{};
    AlgebraKind algebra = AlgebraKind::special_orthogonal;
    std::size_t dev_m = 16;     ///< matrix order of the development layer
    std::size_t smote_k = 5;    ///< 0 disables oversampling of the training split
    bool denoise = false;       ///< wavelet-denoise every series before splitting

    RunConfig() { train.hidden_width = 16; }

    void validate() const {
        train.validate();
        if (dev_m < 2 || dev_m > 64) throw config_error("DEV_Number must lie in [2, 64], got " + std::to_string(dev_m));
        require_valid_order(dev_m, algebra);
    }
};

inline constexpr const char* kConfigKeys[] = {"lr",        "epoch", "batch_size", "DEV_Number", "DNN_Number", "L2_Weight",
                                              "algebra",   "seed",  "init_scale", "smote_k",    "denoise"};

inline std::string allowed_keys() {
    std::string out;
    for (const char* k : kConfigKeys) {
        if (!out.empty()) out += ", ";
        out += k;
    }
    return out;
}

namespace config_detail {

inline double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw config_error("invalid value '" + v + "' for " + key);
    return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw config_error("invalid integer '" + v + "' for " + key);
    return out;
}

inline std::size_t to_positive(const std::string& key, const std::string& v) {
    const long long n = to_int(key, v);
    if (n < 1) throw config_error(key + " must be >= 1");
    return static_cast<std::size_t>(n);
}

}  // namespace config_detail

/// Sets one key. Keys follow the hyperparameter table names.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    using namespace config_detail;
    if (key.rfind("CNN_", 0) == 0 || key.rfind("LSTM_", 0) == 0)
        throw config_error("'" + key +
                           "' configures a CNN/LSTM feature extractor, which this model does not have; "
                           "the classifier is the development layer followed by a dense head");
    if (key == "lr") cfg.train.lr = to_double(key, value);
    else if (key == "epoch") cfg.train.epochs = static_cast<int>(to_positive(key, value));
    else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_positive(key, value));
    else if (key == "DEV_Number") cfg.dev_m = to_positive(key, value);
    else if (key == "DNN_Number") cfg.train.hidden_width = to_positive(key, value);
    else if (key == "L2_Weight") cfg.train.l2_weight = to_double(key, value);
    else if (key == "seed") {
        const long long s = to_int(key, value);
        if (s < 0) throw config_error("seed must be >= 0");
        cfg.train.seed = static_cast<std::uint64_t>(s);
    } else if (key == "algebra") {
        const auto k = parse_algebra(value);
        if (!k) throw config_error("algebra must be one of so, sl, sp, gl; got '" + value + "'");
        cfg.algebra = *k;
    } else if (key == "init_scale") cfg.train.init_scale = to_double(key, value);
    else if (key == "smote_k") {
        const long long k = to_int(key, value);
        if (k < 0) throw config_error("smote_k must be >= 0");
        cfg.smote_k = static_cast<std::size_t>(k);
    } else if (key == "denoise") {
        if (value != "0" && value != "1") throw config_error("denoise must be 0 or 1");
        cfg.denoise = value == "1";
    } else {
        throw config_error("unknown config key '" + key + "'; allowed keys: " + allowed_keys());
    }
}

inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = csv_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = csv_detail::trim(line.substr(0, eq));
        const std::string value = csv_detail::trim(line.substr(eq + 1));
        try {
            set_config_value(cfg, key, value);
        } catch (const config_error& e) {
            throw config_error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config " + path);
    return parse_config(in);
}

inline std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    using csv_detail::format_double;
    if (key == "lr") return format_double(cfg.train.lr);
    if (key == "epoch") return std::to_string(cfg.train.epochs);
    if (key == "batch_size") return std::to_string(cfg.train.batch_size);
    if (key == "DEV_Number") return std::to_string(cfg.dev_m);
    if (key == "DNN_Number") return std::to_string(cfg.train.hidden_width);
    if (key == "L2_Weight") return format_double(cfg.train.l2_weight);
    if (key == "algebra") return std::string(to_string(cfg.algebra));
    if (key == "seed") return std::to_string(cfg.train.seed);
    if (key == "init_scale") return format_double(cfg.train.init_scale);
    if (key == "smote_k") return std::to_string(cfg.smote_k);
    if (key == "denoise") return cfg.denoise ? "1" : "0";
    throw config_error("unknown config key '" + key + "'");
}

/// Full config as key=value lines; parse_config of the result reproduces it.
inline std::string to_config_text(const RunConfig& cfg) {
    std::string out;
    for (const char* k : kConfigKeys) out += std::string(k) + "=" + get_config_value(cfg, k) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Sweep specification
// ---------------------------------------------------------------------------

struct SweepAxis {
    std::string name;
    std::vector<std::string> values;  ///< as written; applied with set_config_value
};

struct SweepSpec {
    std::vector<SweepAxis> axes;
    int passes = 2;
};

/// Checks a candidate against the published hyperparameter ranges:
/// lr in {0.001, 0.01}, epoch in {100, 150, 300}, batch_size in {32, 64, 128},
/// DEV_Number in [16, 32], DNN_Number in [16, 64], L2_Weight in [0, 0.05].
inline void check_sweep_range(const std::string& name, const std::string& value) {
    using namespace config_detail;
    auto fail = [&](const std::string& range) {
        throw config_error("sweep value " + name + "=" + value + " is outside the allowed range " + range);
    };
    if (name == "lr") {
        const double v = to_double(name, value);
        if (v != 0.001 && v != 0.01) fail("{0.001, 0.01}");
    } else if (name == "epoch") {
        const long long v = to_int(name, value);
        if (v != 100 && v != 150 && v != 300) fail("{100, 150, 300}");
    } else if (name == "batch_size") {
        const long long v = to_int(name, value);
        if (v != 32 && v != 64 && v != 128) fail("{32, 64, 128}");
    } else if (name == "DEV_Number") {
        const long long v = to_int(name, value);
        if (v < 16 || v > 32) fail("[16, 32]");
    } else if (name == "DNN_Number") {
        const long long v = to_int(name, value);
        if (v < 16 || v > 64) fail("[16, 64]");
    } else if (name == "L2_Weight") {
        const double v = to_double(name, value);
        if (v < 0.0 || v > 0.05) fail("[0, 0.05]");
    } else {
        throw config_error("'" + name + "' is not a sweepable hyperparameter (lr, epoch, batch_size, DEV_Number, "
                           "DNN_Number, L2_Weight)");
    }
}

inline constexpr const char* kSweepKeys[] = {"lr", "epoch", "batch_size", "DEV_Number", "DNN_Number", "L2_Weight"};

/// Every table hyperparameter of `cfg` must be inside the published ranges.
inline void check_config_in_sweep_ranges(const RunConfig& cfg) {
    for (const char* k : kSweepKeys) check_sweep_range(k, get_config_value(cfg, k));
}

/// Lines `name = v1, v2, ...` in sweep order, plus an optional `passes = N`.
inline SweepSpec parse_sweep(std::istream& in) {
    SweepSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = csv_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw config_error("sweep line " + std::to_string(line_no) + ": expected name=values");
        const std::string name = csv_detail::trim(line.substr(0, eq));
        const std::string rest = line.substr(eq + 1);
        if (name == "passes") {
            const long long p = config_detail::to_int(name, csv_detail::trim(rest));
            if (p < 1) throw config_error("sweep line " + std::to_string(line_no) + ": passes must be >= 1");
            spec.passes = static_cast<int>(p);
            continue;
        }
        SweepAxis axis{name, {}};
        for (const auto& f : csv_detail::split_fields(rest)) {
            const std::string v = csv_detail::trim(f);
            if (v.empty()) continue;
            try {
                check_sweep_range(name, v);
            } catch (const config_error& e) {
                throw config_error("sweep line " + std::to_string(line_no) + ": " + e.what());
            }
            axis.values.push_back(v);
        }
        if (axis.values.empty()) throw config_error("sweep line " + std::to_string(line_no) + ": no candidates for " + name);
        for (const auto& a : spec.axes)
            if (a.name == name) throw config_error("sweep line " + std::to_string(line_no) + ": duplicate axis " + name);
        spec.axes.push_back(std::move(axis));
    }
    if (spec.axes.empty()) throw config_error("sweep specification has no hyperparameters");
    return spec;
}

inline SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open sweep specification " + path);
    return parse_sweep(in);
}

}  // namespace pathdev
