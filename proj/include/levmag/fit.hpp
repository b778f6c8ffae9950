#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "levmag/errors.hpp"
#include "levmag/linalg.hpp"

// Damped Gauss-Newton (Levenberg-style) least squares on sigma-scaled
// residuals. Small parameter counts only; the Jacobian is numeric unless the
// model provides one.
namespace levmag::fit {

/// Residual callback: fills r with sigma-scaled residuals at params p.
using ResidualFn = std::function<void(const std::vector<double>& p, std::vector<double>& r)>;

struct Options {
    int max_iterations = 200;
    double lambda0 = 1e-3;       // initial damping
    double lambda_up = 10.0;     // on rejected step
    double lambda_down = 0.1;    // on accepted step
    double xtol = 1e-12;         // relative step size
    double ftol = 1e-12;         // relative chi2 decrease
    double jacobian_step = 1e-7; // relative FD step per parameter
};

struct Result {
    std::vector<double> params;
    linalg::Matrix covariance; // (J^T J)^-1 at the optimum
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    double condition = 0.0; // of J^T J
    bool degenerate = false;
    std::size_t n_residuals = 0;
};

namespace detail {

inline double chi2_of(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

inline void numeric_jacobian(const ResidualFn& f, const std::vector<double>& p,
                             const std::vector<double>& r0, double rel_step,
                             const std::vector<double>& scales, linalg::Matrix& jac) {
    const std::size_t n = r0.size(), np = p.size();
    jac.assign(n * np, 0.0);
    std::vector<double> rp(n), rm(n);
    std::vector<double> q = p;
    for (std::size_t j = 0; j < np; ++j) {
        const double h = rel_step * (std::fabs(p[j]) + scales[j]);
        q[j] = p[j] + h;
        f(q, rp);
        q[j] = p[j] - h;
        f(q, rm);
        q[j] = p[j];
        for (std::size_t i = 0; i < n; ++i) jac[i * np + j] = (rp[i] - rm[i]) / (2.0 * h);
    }
}

} // namespace detail

/// Minimize sum r_i(p)^2. Throws convergence_error at the iteration cap.
inline Result least_squares(const ResidualFn& f, std::vector<double> p, const Options& opt = {}) {
    const std::size_t np = p.size();
    std::vector<double> r;
    f(p, r);
    const std::size_t n = r.size();
    if (n < np) throw degenerate_fit_error("least_squares: fewer residuals than parameters");
    double chi2 = detail::chi2_of(r);
    double lambda = opt.lambda0;
    // FD step scales: a parameter passing through zero keeps a usable step
    std::vector<double> scales(np);
    for (std::size_t j = 0; j < np; ++j) scales[j] = p[j] != 0.0 ? std::fabs(p[j]) : 1.0;
    linalg::Matrix jac;
    Result out;
    out.n_residuals = n;

    bool recompute_jacobian = true;
    linalg::Matrix jtj(np * np);
    std::vector<double> jtr(np), rtrial;
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        if (recompute_jacobian) {
            detail::numeric_jacobian(f, p, r, opt.jacobian_step, scales, jac);
            for (std::size_t a = 0; a < np; ++a) {
                jtr[a] = 0.0;
                for (std::size_t b = a; b < np; ++b) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i) s += jac[i * np + a] * jac[i * np + b];
                    jtj[a * np + b] = jtj[b * np + a] = s;
                }
                for (std::size_t i = 0; i < n; ++i) jtr[a] += jac[i * np + a] * r[i];
            }
            recompute_jacobian = false;
        }
        // (J^T J + lambda diag(J^T J)) dp = -J^T r
        linalg::Matrix lhs = jtj;
        for (std::size_t a = 0; a < np; ++a) {
            const double d = jtj[a * np + a];
            lhs[a * np + a] += lambda * (d > 0.0 ? d : 1.0);
        }
        std::vector<double> rhs(np);
        for (std::size_t a = 0; a < np; ++a) rhs[a] = -jtr[a];
        std::vector<double> dp;
        try {
            dp = linalg::solve(lhs, rhs);
        } catch (const degenerate_fit_error&) {
            lambda *= opt.lambda_up;
            continue;
        }
        std::vector<double> ptrial(np);
        for (std::size_t a = 0; a < np; ++a) ptrial[a] = p[a] + dp[a];
        f(ptrial, rtrial);
        const double chi2_trial = detail::chi2_of(rtrial);
        if (chi2_trial <= chi2) {
            double maxstep = 0.0;
            for (std::size_t a = 0; a < np; ++a)
                maxstep = std::max(maxstep,
                                   std::fabs(dp[a]) / std::max(std::fabs(ptrial[a]), 1e-30));
            const double drop = chi2 - chi2_trial;
            p = ptrial;
            r = rtrial;
            chi2 = chi2_trial;
            lambda = std::max(lambda * opt.lambda_down, 1e-14);
            recompute_jacobian = true;
            if (maxstep < opt.xtol || drop <= opt.ftol * std::max(chi2, 1e-300)) {
                out.converged = true;
                break;
            }
        } else {
            lambda *= opt.lambda_up;
            if (lambda > 1e14) {
                // no direction improves chi2 at machine scale: numerical optimum
                out.converged = true;
                break;
            }
        }
    }
    if (!out.converged && out.iterations >= opt.max_iterations)
        throw convergence_error("least_squares: iteration cap reached");

    // covariance from the undamped normal matrix at the optimum
    detail::numeric_jacobian(f, p, r, opt.jacobian_step, scales, jac);
    for (std::size_t a = 0; a < np; ++a)
        for (std::size_t b = a; b < np; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += jac[i * np + a] * jac[i * np + b];
            jtj[a * np + b] = jtj[b * np + a] = s;
        }
    auto inv = linalg::sym_inverse(jtj, np);
    out.params = std::move(p);
    out.covariance = std::move(inv.inverse);
    out.condition = inv.condition;
    out.degenerate = inv.degenerate;
    out.chi2 = chi2;
    out.reduced_chi2 = n > np ? chi2 / static_cast<double>(n - np) : 0.0;
    return out;
}

} // namespace levmag::fit
