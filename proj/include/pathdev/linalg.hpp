#pragma once

// Dense square-matrix kernels: products, Hilbert-Schmidt pairing, the matrix
// exponential and the differential of the exponential map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pathdev {

/// Thrown when operand shapes disagree.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown on non-finite input or other mathematically invalid arguments.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

/// Dense m x m real matrix, row-major.
class SquareMatrix {
public:
    SquareMatrix() = default;

    explicit SquareMatrix(std::size_t order) : order_(order), data_(order * order, 0.0) {
        if (order == 0) throw dimension_error("SquareMatrix: order must be >= 1");
    }

    SquareMatrix(std::size_t order, std::vector<double> entries)
        : order_(order), data_(std::move(entries)) {
        if (order == 0) throw dimension_error("SquareMatrix: order must be >= 1");
        if (data_.size() != order * order)
            throw dimension_error("SquareMatrix: expected " + std::to_string(order * order) +
                                  " entries, got " + std::to_string(data_.size()));
    }

    SquareMatrix(std::initializer_list<std::initializer_list<double>> rows) {
        order_ = rows.size();
        if (order_ == 0) throw dimension_error("SquareMatrix: order must be >= 1");
        data_.reserve(order_ * order_);
        for (const auto& r : rows) {
            if (r.size() != order_) throw dimension_error("SquareMatrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static SquareMatrix identity(std::size_t order) {
        SquareMatrix out(order);
        for (std::size_t i = 0; i < order; ++i) out(i, i) = 1.0;
        return out;
    }

    static SquareMatrix diagonal(std::initializer_list<double> diag) {
        SquareMatrix out(diag.size());
        std::size_t i = 0;
        for (double v : diag) {
            out(i, i) = v;
            ++i;
        }
        return out;
    }

    std::size_t order() const noexcept { return order_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * order_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * order_ + c]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    SquareMatrix transposed() const {
        SquareMatrix out(order_);
        for (std::size_t i = 0; i < order_; ++i)
            for (std::size_t j = 0; j < order_; ++j) out(j, i) = (*this)(i, j);
        return out;
    }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < order_; ++i) t += (*this)(i, i);
        return t;
    }

    SquareMatrix& operator+=(const SquareMatrix& o) {
        require_same_order(o, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    SquareMatrix& operator-=(const SquareMatrix& o) {
        require_same_order(o, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    SquareMatrix& operator*=(double s) noexcept {
        for (double& v : data_) v *= s;
        return *this;
    }

    /// this += s * o
    SquareMatrix& add_scaled(const SquareMatrix& o, double s) {
        require_same_order(o, "add_scaled");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
    friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
    friend SquareMatrix operator*(SquareMatrix a, double s) { return a *= s; }
    friend SquareMatrix operator*(double s, SquareMatrix a) { return a *= s; }
    friend SquareMatrix operator-(SquareMatrix a) { return a *= -1.0; }

    friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

    void require_same_order(const SquareMatrix& o, const char* what) const {
        if (o.order_ != order_)
            throw dimension_error(std::string(what) + ": order mismatch (" +
                                  std::to_string(order_) + " vs " + std::to_string(o.order_) + ")");
    }

private:
    std::size_t order_ = 0;
    std::vector<double> data_;
};

inline SquareMatrix mat_mul(const SquareMatrix& a, const SquareMatrix& b) {
    a.require_same_order(b, "mat_mul");
    const std::size_t m = a.order();
    SquareMatrix out(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) { return mat_mul(a, b); }

/// Hilbert-Schmidt pairing tr(a^T b).
inline double hs_inner(const SquareMatrix& a, const SquareMatrix& b) {
    a.require_same_order(b, "hs_inner");
    double s = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return s;
}

inline double frobenius_norm(const SquareMatrix& a) { return std::sqrt(hs_inner(a, a)); }

/// Maximum absolute column sum.
inline double one_norm(const SquareMatrix& a) {
    double best = 0.0;
    for (std::size_t j = 0; j < a.order(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.order(); ++i) s += std::abs(a(i, j));
        best = std::max(best, s);
    }
    return best;
}

/// Determinant by LU with partial pivoting.
inline double determinant(const SquareMatrix& a) {
    const std::size_t m = a.order();
    SquareMatrix lu = a;
    double det = 1.0;
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(lu(r, col)) > std::abs(lu(pivot, col))) pivot = r;
        if (lu(pivot, col) == 0.0) return 0.0;
        if (pivot != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(lu(pivot, c), lu(col, c));
            det = -det;
        }
        const double p = lu(col, col);
        det *= p;
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = lu(r, col) / p;
            if (f == 0.0) continue;
            for (std::size_t c = col + 1; c < m; ++c) lu(r, c) -= f * lu(col, c);
        }
    }
    return det;
}

/// Matrix exponential by scaling and squaring around a truncated Taylor core.
///
/// The argument is scaled by 2^-s until its 1-norm is at most 1/2; the series
/// is then summed until the next term no longer changes the partial sum, and
/// the result is squared s times.
inline SquareMatrix matrix_exp(const SquareMatrix& a) {
    if (!a.all_finite()) throw domain_error("matrix_exp: non-finite entries");
    const std::size_t m = a.order();

    const double norm = one_norm(a);
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const SquareMatrix scaled = a * std::ldexp(1.0, -squarings);

    SquareMatrix result = SquareMatrix::identity(m);
    SquareMatrix term = SquareMatrix::identity(m);
    constexpr int kMaxTerms = 30;
    for (int k = 1; k <= kMaxTerms; ++k) {
        term = mat_mul(term, scaled);
        term *= 1.0 / k;
        result += term;
        if (frobenius_norm(term) <= 1e-18 * frobenius_norm(result)) break;
    }
    for (int i = 0; i < squarings; ++i) result = mat_mul(result, result);
    return result;
}

/// Series truncation for dexp.
struct DexpConfig {
    int max_terms = 30;
    double tolerance = 1e-15;

    void validate() const {
        if (max_terms < 1) throw std::invalid_argument("DexpConfig: max_terms must be >= 1");
        if (!(tolerance >= 0.0)) throw std::invalid_argument("DexpConfig: tolerance must be >= 0");
    }
};

/// Result of a truncated dexp series. `converged` is false when max_terms was
/// exhausted with the last term still above tolerance; the value is then only
/// as accurate as the truncation allows.
struct DexpResult {
    SquareMatrix value;
    bool converged = true;
    int terms_used = 0;
    double last_term_norm = 0.0;
};

/// Directional derivative of exp at `a` in direction `x`:
///   sum_k (-ad a)^k / (k+1)! applied to exp(a) x.
/// Valid as the Frechet derivative because a commutes with exp(a).
inline DexpResult dexp(const SquareMatrix& a, const SquareMatrix& x, const DexpConfig& cfg = {}) {
    a.require_same_order(x, "dexp");
    cfg.validate();
    if (!a.all_finite() || !x.all_finite()) throw domain_error("dexp: non-finite entries");

    SquareMatrix term = mat_mul(matrix_exp(a), x);
    DexpResult out{term, false, 1, frobenius_norm(term)};
    if (out.last_term_norm <= cfg.tolerance) {
        out.converged = true;
        return out;
    }
    for (int k = 1; k < cfg.max_terms; ++k) {
        // term_k = -[a, term_{k-1}] / (k+1)
        SquareMatrix next = mat_mul(term, a);
        next -= mat_mul(a, term);
        next *= 1.0 / (k + 1);
        term = std::move(next);
        out.value += term;
        out.terms_used = k + 1;
        out.last_term_norm = frobenius_norm(term);
        if (out.last_term_norm <= cfg.tolerance) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

/// Frechet derivative of exp via the upper-right block of exp([[a, x], [0, a]]).
/// No truncation parameter; used when the dexp series fails to converge.
inline SquareMatrix dexp_block(const SquareMatrix& a, const SquareMatrix& x) {
    a.require_same_order(x, "dexp_block");
    const std::size_t m = a.order();
    SquareMatrix big(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            big(i, j) = a(i, j);
            big(i, j + m) = x(i, j);
            big(i + m, j + m) = a(i, j);
        }
    }
    const SquareMatrix e = matrix_exp(big);
    SquareMatrix out(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = e(i, j + m);
    return out;
}

/// Hilbert-Schmidt gradient of f o exp at `a`, given grad f evaluated at exp(a).
inline DexpResult grad_through_exp(const SquareMatrix& a, const SquareMatrix& grad_f_at_exp_a,
                                   const DexpConfig& cfg = {}) {
    return dexp(a.transposed(), grad_f_at_exp_a, cfg);
}

}  // namespace pathdev
