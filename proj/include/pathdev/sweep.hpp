#pragma once

// Coordinate-descent hyperparameter search: one hyperparameter at a time, the
// others held fixed, repeated for a number of passes.

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pathdev/config.hpp"

namespace pathdev {

struct SweepRun {
    std::size_t index = 0;
    int pass = 0;
    std::string axis;
    RunConfig config;
    double objective = 0.0;
};

struct SweepOutcome {
    RunConfig best;
    double best_objective = 0.0;
    std::vector<SweepRun> leaderboard;  ///< every distinct configuration evaluated, in order
    int passes_run = 0;
};

/// Maximises `objective(config)`. For each axis every candidate is tried with
/// the other hyperparameters at their current values; the best candidate is
/// adopted (ties: smaller value). Stops early once a full pass changes nothing.
/// Identical configurations are evaluated once.
inline SweepOutcome coordinate_descent(const RunConfig& base, const SweepSpec& spec,
                                       const std::function<double(const RunConfig&)>& objective) {
    if (spec.axes.empty()) throw config_error("sweep: no axes");
    SweepOutcome out{base, 0.0, {}, 0};
    std::map<std::string, double> cache;

    auto evaluate = [&](const RunConfig& cfg, int pass, const std::string& axis) {
        const std::string key = to_config_text(cfg);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        const double obj = objective(cfg);
        cache.emplace(key, obj);
        out.leaderboard.push_back(SweepRun{out.leaderboard.size(), pass, axis, cfg, obj});
        return obj;
    };

    RunConfig current = base;
    double current_obj = 0.0;
    for (int pass = 1; pass <= spec.passes; ++pass) {
        out.passes_run = pass;
        bool changed = false;
        for (const SweepAxis& axis : spec.axes) {
            std::vector<std::string> values = axis.values;
            std::stable_sort(values.begin(), values.end(), [&](const std::string& a, const std::string& b) {
                return config_detail::to_double(axis.name, a) < config_detail::to_double(axis.name, b);
            });
            bool have = false;
            RunConfig best_cfg = current;
            double best_obj = 0.0;
            for (const std::string& v : values) {
                RunConfig cand = current;
                set_config_value(cand, axis.name, v);
                const double obj = evaluate(cand, pass, axis.name);
                if (!have || obj > best_obj) {
                    have = true;
                    best_obj = obj;
                    best_cfg = cand;
                }
            }
            if (to_config_text(best_cfg) != to_config_text(current)) changed = true;
            current = best_cfg;
            current_obj = best_obj;
        }
        if (!changed) break;
    }
    out.best = current;
    out.best_objective = current_obj;
    return out;
}

}  // namespace pathdev
