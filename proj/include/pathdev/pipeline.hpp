#pragma once

// Data preparation and training driven by a RunConfig.

#include "pathdev/config.hpp"
#include "pathdev/dataset.hpp"
#include "pathdev/model.hpp"
#include "pathdev/preprocess.hpp"

namespace pathdev {

/// denoise (optional) -> split (when the labels carry none) -> SMOTE on train.
inline Dataset prepare_dataset(const Dataset& raw, const RunConfig& cfg) {
    raw.validate();
    Dataset ds = cfg.denoise ? denoise_dataset(raw) : raw;
    if (!ds.has_splits()) ds = split_dataset(ds, cfg.train.seed);
    if (cfg.smote_k > 0) ds = augment_training(ds, cfg.smote_k, cfg.train.seed);
    return ds;
}

inline TrainResult run_training(const Dataset& prepared, const RunConfig& cfg, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    return train(prepared, cfg.algebra, cfg.dev_m, cfg.train, on_epoch);
}

/// Sweep objective: validation specificity of the kept snapshot, 0 when no
/// epoch met NPV = 1.
inline double sweep_objective(const TrainResult& r) {
    return r.eligible ? r.validation.specificity.value_or(0.0) : 0.0;
}

}  // namespace pathdev
