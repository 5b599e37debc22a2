#pragma once

// JSON model artifact, evaluation report and training trace serialization.

#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "pathdev/config.hpp"
#include "pathdev/model.hpp"

namespace pathdev {

struct ModelArtifact {
    ModelState model;
    double threshold = 0.0;
    RunConfig config;
};

namespace artifact_detail {

using json = nlohmann::ordered_json;

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <class T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw parse_error(std::string("artifact: missing key '") + key + "'");
    return j.at(key).get<T>();
}

}  // namespace artifact_detail

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
    using artifact_detail::optional_number;
    return {{"tp", r.counts.tp},
            {"tn", r.counts.tn},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"npv", optional_number(r.npv)},
            {"specificity", optional_number(r.specificity)},
            {"threshold", r.threshold}};
}

inline std::string report_text(const EvalReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline nlohmann::ordered_json artifact_to_json(const ModelArtifact& a) {
    nlohmann::ordered_json theta = nlohmann::ordered_json::array();
    for (const auto& t : a.model.dev.theta)
        theta.push_back(std::vector<double>(t.values().begin(), t.values().end()));
    const DenseHead& h = a.model.head;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const char* k : kConfigKeys) config[k] = get_config_value(a.config, k);
    return {{"algebra", std::string(to_string(a.model.dev.algebra))},
            {"order", a.model.dev.order()},
            {"channels", a.model.dev.channels()},
            {"theta", theta},
            {"head", {{"input", h.input}, {"hidden", h.hidden}, {"w1", h.w1}, {"b1", h.b1}, {"w2", h.w2}, {"b2", h.b2}}},
            {"threshold", a.threshold},
            {"config", config}};
}

inline ModelArtifact artifact_from_json(const nlohmann::ordered_json& j) {
    using artifact_detail::require;
    try {
        ModelArtifact a;
        const auto algebra = parse_algebra(require<std::string>(j, "algebra"));
        if (!algebra) throw parse_error("artifact: unknown algebra");
        const auto m = require<std::size_t>(j, "order");
        const auto d = require<std::size_t>(j, "channels");
        require_valid_order(m, *algebra);
        const auto theta = require<std::vector<std::vector<double>>>(j, "theta");
        if (theta.size() != d) throw parse_error("artifact: theta count does not match channels");
        a.model.dev.algebra = *algebra;
        for (const auto& t : theta) {
            if (t.size() != m * m) throw parse_error("artifact: theta entry has wrong size");
            a.model.dev.theta.emplace_back(m, t);
        }
        const auto& hj = j.at("head");
        DenseHead& h = a.model.head;
        h.input = require<std::size_t>(hj, "input");
        h.hidden = require<std::size_t>(hj, "hidden");
        h.w1 = require<std::vector<double>>(hj, "w1");
        h.b1 = require<std::vector<double>>(hj, "b1");
        h.w2 = require<std::vector<double>>(hj, "w2");
        h.b2 = require<std::vector<double>>(hj, "b2");
        if (h.input != m * m || h.w1.size() != h.hidden * h.input || h.b1.size() != h.hidden ||
            h.w2.size() != 2 * h.hidden || h.b2.size() != 2)
            throw parse_error("artifact: head shapes are inconsistent");
        a.threshold = require<double>(j, "threshold");
        if (j.contains("config"))
            for (const auto& [k, v] : j.at("config").items()) set_config_value(a.config, k, v.get<std::string>());
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("artifact: ") + e.what());
    }
}

inline void save_artifact(const ModelArtifact& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << artifact_to_json(a).dump(2) << '\n';
}

inline ModelArtifact load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open model artifact " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("artifact " + path + ": " + e.what());
    }
    return artifact_from_json(j);
}

inline constexpr const char* kTraceHeader = "epoch,train_loss,val_loss,val_specificity,threshold";

inline std::string trace_line(const TraceRecord& r) {
    using csv_detail::format_double;
    return std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.val_loss) + "," +
           format_double(r.val_specificity) + "," + format_double(r.threshold);
}

inline void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace) out << trace_line(r) << '\n';
}

}  // namespace pathdev
