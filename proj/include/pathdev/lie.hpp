#pragma once

// Real matrix Lie algebras: membership, HS-orthogonal projection, bracket and
// group-membership diagnostics.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "pathdev/linalg.hpp"

namespace pathdev {

enum class AlgebraKind { general_linear, special_orthogonal, special_linear, symplectic };

inline std::string_view to_string(AlgebraKind k) {
    switch (k) {
        case AlgebraKind::general_linear: return "gl";
        case AlgebraKind::special_orthogonal: return "so";
        case AlgebraKind::special_linear: return "sl";
        case AlgebraKind::symplectic: return "sp";
    }
    return "?";
}

inline std::optional<AlgebraKind> parse_algebra(std::string_view s) {
    if (s == "gl") return AlgebraKind::general_linear;
    if (s == "so") return AlgebraKind::special_orthogonal;
    if (s == "sl") return AlgebraKind::special_linear;
    if (s == "sp") return AlgebraKind::symplectic;
    return std::nullopt;
}

inline void require_valid_order(std::size_t order, AlgebraKind kind) {
    if (order == 0) throw dimension_error("algebra order must be >= 1");
    if (kind == AlgebraKind::symplectic && order % 2 != 0)
        throw dimension_error("symplectic algebra requires even order, got " + std::to_string(order));
}

/// Standard symplectic form [[0, I], [-I, 0]] of order 2n.
inline SquareMatrix symplectic_form(std::size_t order) {
    require_valid_order(order, AlgebraKind::symplectic);
    const std::size_t n = order / 2;
    SquareMatrix j(order);
    for (std::size_t i = 0; i < n; ++i) {
        j(i, i + n) = 1.0;
        j(i + n, i) = -1.0;
    }
    return j;
}

/// Commutator xy - yx.
inline SquareMatrix bracket(const SquareMatrix& x, const SquareMatrix& y) {
    return mat_mul(x, y) - mat_mul(y, x);
}

/// Orthogonal projection (Hilbert-Schmidt metric) of gl(m) onto the algebra.
inline SquareMatrix project(const SquareMatrix& a, AlgebraKind kind) {
    require_valid_order(a.order(), kind);
    const std::size_t m = a.order();
    switch (kind) {
        case AlgebraKind::general_linear: return a;
        case AlgebraKind::special_orthogonal: {
            SquareMatrix out(m);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) out(i, j) = 0.5 * (a(i, j) - a(j, i));
            return out;
        }
        case AlgebraKind::special_linear: {
            SquareMatrix out = a;
            const double shift = a.trace() / static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i) out(i, i) -= shift;
            return out;
        }
        case AlgebraKind::symplectic: {
            // (a + J a^T J) / 2
            const SquareMatrix j = symplectic_form(m);
            SquareMatrix out = a + mat_mul(mat_mul(j, a.transposed()), j);
            out *= 0.5;
            return out;
        }
    }
    return a;
}

/// Frobenius-norm residual of the algebra's defining condition.
inline double algebra_residual(const SquareMatrix& a, AlgebraKind kind) {
    switch (kind) {
        case AlgebraKind::general_linear: return 0.0;
        case AlgebraKind::special_orthogonal: return frobenius_norm(a + a.transposed());
        case AlgebraKind::special_linear: return std::abs(a.trace());
        case AlgebraKind::symplectic: {
            const SquareMatrix j = symplectic_form(a.order());
            return frobenius_norm(mat_mul(a.transposed(), j) + mat_mul(j, a));
        }
    }
    return 0.0;
}

inline bool in_algebra(const SquareMatrix& a, AlgebraKind kind, double tol) {
    if (kind == AlgebraKind::symplectic && a.order() % 2 != 0) return false;
    return algebra_residual(a, kind) <= tol;
}

inline bool group_check(const SquareMatrix& z, AlgebraKind kind, double tol) {
    const std::size_t m = z.order();
    if (!z.all_finite()) return false;
    switch (kind) {
        case AlgebraKind::general_linear: return std::abs(determinant(z)) > tol;
        case AlgebraKind::special_orthogonal: {
            const SquareMatrix gram = mat_mul(z.transposed(), z) - SquareMatrix::identity(m);
            return frobenius_norm(gram) <= tol && std::abs(determinant(z) - 1.0) <= tol;
        }
        case AlgebraKind::special_linear: return std::abs(determinant(z) - 1.0) <= tol;
        case AlgebraKind::symplectic: {
            if (m % 2 != 0) return false;
            const SquareMatrix j = symplectic_form(m);
            return frobenius_norm(mat_mul(mat_mul(z.transposed(), j), z) - j) <= tol;
        }
    }
    return false;
}

}  // namespace pathdev
