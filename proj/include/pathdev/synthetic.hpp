#pragma once

// Synthetic benchmark: planar circular arcs traversed clockwise (label 0) or
// counter-clockwise (label 1) under random monotone time warps.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "pathdev/dataset.hpp"

namespace pathdev {

struct ArcTaskSpec {
    std::size_t train = 400;
    std::size_t validation = 50;
    std::size_t test = 50;
    std::size_t points = 33;
    double noise = 0.01;
    std::uint64_t seed = 0;
};

namespace synthetic_detail {

/// Random increasing map of [0, 1] onto itself: a mixture of a power warp and a
/// piecewise-linear warp with random knot speeds.
inline std::vector<double> random_warp(std::size_t points, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> gamma_log(std::log(0.4), std::log(2.5));
    std::uniform_real_distribution<double> speed(0.2, 3.0);
    const double gamma = std::exp(gamma_log(rng));
    constexpr int knots = 4;
    double cum[knots + 1] = {0.0};
    for (int k = 0; k < knots; ++k) cum[k + 1] = cum[k] + speed(rng);
    std::vector<double> u(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double s = std::pow(static_cast<double>(i) / static_cast<double>(points - 1), gamma);
        const double pos = s * knots;
        const int k = std::min(static_cast<int>(pos), knots - 1);
        u[i] = (cum[k] + (pos - k) * (cum[k + 1] - cum[k])) / cum[knots];
    }
    return u;
}

}  // namespace synthetic_detail

inline Sample make_arc(const std::string& id, int label, std::size_t points, double noise, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> centre(-1.0, 1.0), radius(0.5, 1.5), angle(0.0, 2 * std::numbers::pi),
        sweep(0.5 * std::numbers::pi, 1.5 * std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, noise);
    const double cx = centre(rng), cy = centre(rng), r = radius(rng), phi0 = angle(rng), span = sweep(rng);
    const double dir = label == 1 ? 1.0 : -1.0;
    const auto u = synthetic_detail::random_warp(points, rng);
    std::vector<double> v(points * 2);
    for (std::size_t i = 0; i < points; ++i) {
        const double phi = phi0 + dir * span * u[i];
        v[2 * i] = cx + r * std::cos(phi) + jitter(rng);
        v[2 * i + 1] = cy + r * std::sin(phi) + jitter(rng);
    }
    return Sample{id, TimeSeries(2, std::move(v)), label, Split::unassigned};
}

/// Balanced arc dataset with split tags already assigned.
inline Dataset make_arc_dataset(const ArcTaskSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    Dataset ds;
    std::size_t id = 0;
    auto emit = [&](std::size_t count, Split split) {
        for (std::size_t i = 0; i < count; ++i, ++id) {
            Sample s = make_arc("arc" + std::to_string(id), static_cast<int>(i % 2), spec.points, spec.noise, rng);
            s.split = split;
            ds.samples.push_back(std::move(s));
        }
    };
    emit(spec.train, Split::train);
    emit(spec.validation, Split::validation);
    emit(spec.test, Split::test);
    return ds;
}

}  // namespace pathdev
