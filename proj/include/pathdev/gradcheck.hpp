#pragma once

// Finite-difference verification of the development layer's backward pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pathdev/devlayer.hpp"

namespace pathdev {

struct GradcheckOptions {
    std::size_t max_channels = 3;
    std::size_t max_order = 4;
    std::size_t max_steps = 10;
    int configs = 20;
    std::uint64_t seed = 7;
    std::vector<AlgebraKind> algebras{AlgebraKind::special_orthogonal, AlgebraKind::special_linear,
                                      AlgebraKind::symplectic};
    bool zero_path = false;   ///< use constant paths (gradient is identically zero)
    double corrupt = 0.0;     ///< scale the analytic gradient by (1 + corrupt); negative control
    double tolerance = 1e-4;
    double step = 1e-6;
};

struct GradcheckCase {
    AlgebraKind algebra{};
    std::size_t channels = 0, order = 0, steps = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

namespace gradcheck_detail {

/// psi(z) = sum_n <C_n, z_n> + |z_N - T|^2, touching every step and the endpoint.
struct TestLoss {
    std::vector<SquareMatrix> weights;
    SquareMatrix target;

    double operator()(const DevOutput& z) const {
        double s = 0.0;
        for (std::size_t n = 0; n < weights.size(); ++n) s += hs_inner(weights[n], z.sequence[n]);
        const SquareMatrix r = z.final() - target;
        return s + hs_inner(r, r);
    }

    std::vector<SquareMatrix> partials(const DevOutput& z) const {
        std::vector<SquareMatrix> g = weights;
        g.back() += 2.0 * (z.final() - target);
        return g;
    }
};

}  // namespace gradcheck_detail

/// Largest entrywise deviation between `got` and `want`, relative to the
/// largest entry of `want` (absolute when `want` vanishes).
inline double max_relative_error(const std::vector<SquareMatrix>& got, const std::vector<SquareMatrix>& want) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < want.size(); ++j)
        for (std::size_t i = 0; i < want[j].size(); ++i) {
            scale = std::max(scale, std::abs(want[j].values()[i]));
            diff = std::max(diff, std::abs(got[j].values()[i] - want[j].values()[i]));
        }
    return scale > 0.0 ? diff / scale : diff;
}

inline GradcheckCase check_gradient_case(const DevParams& params, const TimeSeries& x,
                                         const GradcheckOptions& opt, std::mt19937_64& rng) {
    using gradcheck_detail::TestLoss;
    const std::size_t m = params.order();
    std::normal_distribution<double> nd(0.0, 1.0);
    TestLoss loss{{}, SquareMatrix(m)};
    for (std::size_t n = 0; n < x.points(); ++n) {
        SquareMatrix c(m);
        for (double& v : c.values()) v = nd(rng);
        loss.weights.push_back(std::move(c));
    }
    for (double& v : loss.target.values()) v = nd(rng);

    const DevOutput z = forward(params, x, false);
    const auto partials = loss.partials(z);
    DevGradient g = backward(params, x, z, partials);
    for (auto& gj : g.theta) gj *= 1.0 + opt.corrupt;

    std::vector<SquareMatrix> fd;
    for (std::size_t j = 0; j < params.channels(); ++j) {
        SquareMatrix gj(m);
        for (std::size_t i = 0; i < gj.size(); ++i) {
            DevParams plus = params, minus = params;
            plus.theta[j].values()[i] += opt.step;
            minus.theta[j].values()[i] -= opt.step;
            gj.values()[i] = (loss(forward(plus, x, false)) - loss(forward(minus, x, false))) / (2.0 * opt.step);
        }
        fd.push_back(std::move(gj));
    }
    GradcheckCase c{params.algebra, params.channels(), m, x.steps(), max_relative_error(g.theta, fd), false};
    c.passed = c.max_rel_error <= opt.tolerance;
    return c;
}

/// Random configurations with channels <= max_channels, order <= max_order
/// (even for symplectic) and steps <= max_steps.
inline std::vector<GradcheckCase> run_gradcheck(const GradcheckOptions& opt) {
    if (opt.algebras.empty()) throw std::invalid_argument("gradcheck: no algebras");
    if (opt.max_channels < 1 || opt.max_order < 2 || opt.max_steps < 1)
        throw std::invalid_argument("gradcheck: need channels >= 1, order >= 2, steps >= 1");
    std::mt19937_64 rng(opt.seed);
    std::vector<GradcheckCase> out;
    for (int i = 0; i < opt.configs; ++i) {
        const AlgebraKind kind = opt.algebras[static_cast<std::size_t>(i) % opt.algebras.size()];
        std::uniform_int_distribution<std::size_t> pick_d(1, opt.max_channels), pick_n(1, opt.max_steps);
        std::size_t m = std::uniform_int_distribution<std::size_t>(2, opt.max_order)(rng);
        if (kind == AlgebraKind::symplectic && m % 2) m = m - 1;
        const std::size_t d = pick_d(rng), steps = pick_n(rng);
        const DevParams params = init_params(kind, m, d, 0.7, rng());
        std::normal_distribution<double> nd(0.0, 0.5);
        std::vector<double> v((steps + 1) * d);
        for (std::size_t c = 0; c < d; ++c) v[c] = nd(rng);
        for (std::size_t t = 1; t <= steps; ++t)
            for (std::size_t c = 0; c < d; ++c) v[t * d + c] = v[(t - 1) * d + c] + (opt.zero_path ? 0.0 : nd(rng));
        out.push_back(check_gradient_case(params, TimeSeries(d, std::move(v)), opt, rng));
    }
    return out;
}

}  // namespace pathdev
