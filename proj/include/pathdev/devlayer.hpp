#pragma once

// Path development layer. A d-channel series x_0..x_N is mapped to the group
// sequence z_n = z_{n-1} exp(M(x_n - x_{n-1})), z_0 = I, where
// M(v) = sum_j theta_j v_j is a linear map into a matrix Lie algebra.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pathdev/lie.hpp"
#include "pathdev/linalg.hpp"

namespace pathdev {

/// d-channel series sampled at steps+1 points, stored row-major (time, channel).
class TimeSeries {
public:
    TimeSeries() = default;

    TimeSeries(std::size_t channels, std::vector<double> values)
        : channels_(channels), values_(std::move(values)) {
        if (channels_ == 0) throw dimension_error("TimeSeries: channels must be >= 1");
        if (values_.empty() || values_.size() % channels_ != 0)
            throw dimension_error("TimeSeries: value count " + std::to_string(values_.size()) +
                                  " is not a positive multiple of channels " +
                                  std::to_string(channels_));
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t points() const noexcept { return channels_ == 0 ? 0 : values_.size() / channels_; }
    std::size_t steps() const noexcept { return points() == 0 ? 0 : points() - 1; }

    std::span<const double> point(std::size_t n) const {
        return std::span<const double>(values_).subspan(n * channels_, channels_);
    }
    double operator()(std::size_t n, std::size_t c) const noexcept { return values_[n * channels_ + c]; }
    double& operator()(std::size_t n, std::size_t c) noexcept { return values_[n * channels_ + c]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// x_n - x_{n-1}, for n in [1, steps].
    std::vector<double> increment(std::size_t n) const {
        std::vector<double> dx(channels_);
        for (std::size_t c = 0; c < channels_; ++c) dx[c] = (*this)(n, c) - (*this)(n - 1, c);
        return dx;
    }

    /// One channel as a contiguous series.
    std::vector<double> channel(std::size_t c) const {
        std::vector<double> out(points());
        for (std::size_t n = 0; n < out.size(); ++n) out[n] = (*this)(n, c);
        return out;
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::size_t channels_ = 0;
    std::vector<double> values_;
};

/// Layer weights: one algebra element per input channel.
struct DevParams {
    AlgebraKind algebra = AlgebraKind::special_orthogonal;
    std::vector<SquareMatrix> theta;

    std::size_t channels() const noexcept { return theta.size(); }
    std::size_t order() const noexcept { return theta.empty() ? 0 : theta.front().order(); }

    bool in_algebra(double tol = 1e-10) const {
        for (const auto& t : theta)
            if (!pathdev::in_algebra(t, algebra, tol)) return false;
        return true;
    }
};

struct DevOutput {
    /// z_0..z_N, or only z_N when the forward pass ran static-only.
    std::vector<SquareMatrix> sequence;
    bool static_only = false;

    const SquareMatrix& final() const { return sequence.back(); }
};

/// Raw (gl-valued, unprojected) gradient with respect to each theta_j.
struct DevGradient {
    std::vector<SquareMatrix> theta;
    /// Number of dexp evaluations that fell back to the block-triangular route.
    int dexp_fallbacks = 0;
};

/// M_theta(v) = sum_j theta_j v_j.
inline SquareMatrix linear_embed(const DevParams& params, std::span<const double> v) {
    if (params.theta.empty()) throw dimension_error("linear_embed: no parameters");
    if (v.size() != params.channels())
        throw dimension_error("linear_embed: expected " + std::to_string(params.channels()) +
                              " channels, got " + std::to_string(v.size()));
    SquareMatrix out(params.order());
    for (std::size_t j = 0; j < v.size(); ++j)
        if (v[j] != 0.0) out.add_scaled(params.theta[j], v[j]);
    return out;
}

/// theta_j = project(G_j) with G_j i.i.d. normal(0, scale).
inline DevParams init_params(AlgebraKind algebra, std::size_t order, std::size_t channels, double scale,
                             std::uint64_t seed) {
    if (!(scale > 0.0)) throw std::invalid_argument("init_params: scale must be > 0");
    if (channels == 0) throw dimension_error("init_params: channels must be >= 1");
    require_valid_order(order, algebra);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    DevParams p{algebra, {}};
    p.theta.reserve(channels);
    for (std::size_t j = 0; j < channels; ++j) {
        SquareMatrix g(order);
        for (double& v : g.values()) v = normal(rng);
        p.theta.push_back(project(g, algebra));
    }
    return p;
}

inline DevOutput forward(const DevParams& params, const TimeSeries& x, bool static_only = true) {
    if (x.channels() != params.channels())
        throw dimension_error("forward: series has " + std::to_string(x.channels()) +
                              " channels, parameters expect " + std::to_string(params.channels()));
    if (x.points() == 0) throw dimension_error("forward: empty series");
    DevOutput out;
    out.static_only = static_only;
    SquareMatrix z = SquareMatrix::identity(params.order());
    if (!static_only) out.sequence.reserve(x.points());
    if (!static_only) out.sequence.push_back(z);
    for (std::size_t n = 1; n <= x.steps(); ++n) {
        const auto dx = x.increment(n);
        for (double v : dx)
            if (!std::isfinite(v)) throw domain_error("forward: non-finite increment at step " + std::to_string(n));
        z = mat_mul(z, matrix_exp(linear_embed(params, dx)));
        if (!static_only) out.sequence.push_back(z);
    }
    if (static_only) out.sequence.push_back(std::move(z));
    return out;
}

/// Gradient of a loss psi(z_0..z_N) with respect to theta, given the partials
/// dpsi/dz_n (one per point of `x`).
///
/// Reverse sweep with the chain rule of z_n = z_{n-1} E_n, E_n = exp(J_n):
///   adj_n  = dpsi/dz_n + adj_{n+1} E_{n+1}^T
///   dpsi/dJ_n = dexp_{J_n^T}(z_{n-1}^T adj_n)
///   dpsi/dtheta_j += dpsi/dJ_n * (dx_n)_j
/// `z` may be a static output; the sequence is then recomputed.
inline DevGradient backward(const DevParams& params, const TimeSeries& x, const DevOutput& z,
                            std::span<const SquareMatrix> grad_z, const DexpConfig& cfg = {}) {
    if (grad_z.size() != x.points())
        throw dimension_error("backward: expected " + std::to_string(x.points()) +
                              " output gradients, got " + std::to_string(grad_z.size()));
    const std::size_t m = params.order();
    for (const auto& g : grad_z)
        if (g.order() != m) throw dimension_error("backward: gradient order mismatch");

    DevOutput full;
    const DevOutput* seq = &z;
    if (z.static_only || z.sequence.size() != x.points()) {
        full = forward(params, x, false);
        seq = &full;
    }
    if (seq->sequence.front().order() != m) throw dimension_error("backward: output order mismatch");

    DevGradient grad;
    grad.theta.assign(params.channels(), SquareMatrix(m));
    SquareMatrix adj = grad_z[x.steps()];
    SquareMatrix next_exp_t;  // E_{n+1}^T
    for (std::size_t n = x.steps(); n >= 1; --n) {
        if (n < x.steps()) {
            adj = grad_z[n] + mat_mul(adj, next_exp_t);
        }
        const auto dx = x.increment(n);
        const SquareMatrix jn = linear_embed(params, dx);
        const SquareMatrix g_exp = mat_mul(seq->sequence[n - 1].transposed(), adj);
        DexpResult dj = grad_through_exp(jn, g_exp, cfg);
        if (!dj.converged) {
            dj.value = dexp_block(jn.transposed(), g_exp);
            ++grad.dexp_fallbacks;
        }
        for (std::size_t j = 0; j < dx.size(); ++j)
            if (dx[j] != 0.0) grad.theta[j].add_scaled(dj.value, dx[j]);
        next_exp_t = matrix_exp(jn).transposed();
    }
    return grad;
}

/// Gradient when only z_N feeds the loss.
inline DevGradient backward_static(const DevParams& params, const TimeSeries& x,
                                   const SquareMatrix& grad_final, const DexpConfig& cfg = {}) {
    std::vector<SquareMatrix> gz(x.points(), SquareMatrix(params.order()));
    gz.back() = grad_final;
    DevOutput z{{}, true};
    return backward(params, x, z, gz, cfg);
}

/// theta_j <- project(theta_j - step_j).
inline DevParams apply_update(const DevParams& params, std::span<const SquareMatrix> step) {
    if (step.size() != params.channels()) throw dimension_error("apply_update: step count mismatch");
    DevParams out{params.algebra, {}};
    out.theta.reserve(params.channels());
    for (std::size_t j = 0; j < params.channels(); ++j)
        out.theta.push_back(project(params.theta[j] - step[j], params.algebra));
    return out;
}

}  // namespace pathdev
