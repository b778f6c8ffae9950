#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "levmag/errors.hpp"

// Small dense matrices stored row-major in std::vector<double>. Problem
// sizes in this toolkit are at most ~6x6, so plain Gaussian elimination and
// Jacobi rotations are entirely adequate.
namespace levmag::linalg {

using Matrix = std::vector<double>; // row-major n*m

/// Solve A x = b in place (partial pivoting). A is n x n, overwritten.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == 0.0) throw degenerate_fit_error("linalg::solve: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        const double d = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
        x[i] = s / a[i * n + i];
    }
    return x;
}

/// Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues;
/// `vecs` (n x n, columns are eigenvectors) is filled if non-null.
inline std::vector<double> sym_eigen(Matrix a, std::size_t n, Matrix* vecs = nullptr) {
    Matrix v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
    }
    std::vector<double> evals(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a[i * n + i];
    if (vecs) *vecs = std::move(v);
    return evals;
}

struct SymInverse {
    Matrix inverse;        // pseudo-inverse when near-singular
    double condition;      // |lambda|_max / |lambda|_min (inf if singular)
    bool degenerate;       // true when a pseudo-inverse was taken
};

/// Inverse of a symmetric positive-(semi)definite matrix via its
/// eigendecomposition; nearly-null directions are pseudo-inverted and
/// flagged instead of blowing up.
inline SymInverse sym_inverse(const Matrix& a, std::size_t n, double rcond = 1e-12) {
    Matrix vecs;
    std::vector<double> ev = sym_eigen(a, n, &vecs);
    double emax = 0.0;
    for (double e : ev) emax = std::max(emax, std::fabs(e));
    if (emax == 0.0) throw degenerate_fit_error("sym_inverse: zero matrix");
    double emin = emax;
    bool degenerate = false;
    Matrix inv(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        emin = std::min(emin, std::fabs(ev[k]));
        double ik;
        if (std::fabs(ev[k]) < rcond * emax) {
            ik = 0.0; // null direction: pseudo-inverse
            degenerate = true;
        } else {
            ik = 1.0 / ev[k];
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                inv[i * n + j] += vecs[i * n + k] * ik * vecs[j * n + k];
    }
    const double cond = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
    return {std::move(inv), cond, degenerate};
}

} // namespace levmag::linalg
