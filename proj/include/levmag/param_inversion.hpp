#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"
#include "levmag/linalg.hpp"
#include "levmag/rng.hpp"
#include "levmag/trap_model.hpp"
#include "levmag/types.hpp"

// In-situ estimation of the sphere radius R and magnetization M from the
// measured z and beta mode frequencies, with uncertainty propagation, plus
// the independent viscous-damping radius estimate.
namespace levmag::inversion {

struct InversionResult {
    double radius_m = 0.0;
    double magnetization_a_m = 0.0;
    double sigma_radius_m = 0.0;
    double sigma_magnetization_a_m = 0.0;
    double correlation_rm = 0.0;
    double failed_fraction = 0.0; // Monte-Carlo draws that failed to invert
    std::size_t n_samples = 0;    // 0 for the linear method
};

enum class UncertaintyMethod { linear, monte_carlo };

struct SearchBox {
    double radius_min_m = 0.5e-6;
    double radius_max_m = 500e-6;
    double magnetization_min_a_m = 1e4;
    double magnetization_max_a_m = 2e6;
};

namespace detail {

struct Forward {
    double density, cavity_radius, gravity;

    std::array<double, 2> operator()(double radius, double magnetization) const {
        MagnetParams magnet{radius, density, magnetization};
        TrapGeometry geo{cavity_radius, gravity};
        const EquilibriumState eq = trap::find_equilibrium(magnet, geo);
        return {trap::mode_frequency_z(magnet, geo, eq),
                trap::mode_frequency_beta(magnet, geo, eq)};
    }
};

/// Reduce the 2-D problem to 1-D: both frequencies factor through
/// q = mu0 M^2 R^3 / (3 rho) (the magnetic-to-gravitational energy ratio of
/// a point dipole). f_z depends on q alone; given q, f_beta fixes R and
/// then q fixes M. Used to seed the Newton iteration.
inline std::array<double, 2> reduced_guess(double f_z, double f_beta, double rho, double a,
                                           double g, const SearchBox& box) {
    auto f_z_of_q = [&](double q) {
        const double r = trap::detail::find_equilibrium_radius(q, 1.0, g, a, 1e-6 * a,
                                                               a * (1.0 - 1e-6));
        const double g1 = trap::detail::image_factor_logd(r, a);
        const double d2 = q * trap::detail::image_factor(r, a) *
                          (g1 * g1 + trap::detail::image_factor_logd_prime(r, a));
        return std::sqrt(d2) / (2.0 * constants::pi);
    };
    auto q_of = [&](double R, double M) { return constants::mu0 * M * M * R * R * R / (3.0 * rho); };
    double ql = q_of(box.radius_min_m, box.magnetization_min_a_m) * 0.1;
    double qh = q_of(box.radius_max_m, box.magnetization_max_a_m) * 10.0;

    // bracket f_z(q) = f_z on a log grid, then bisect
    const int n = 160;
    double qa = ql, fa;
    try {
        fa = f_z_of_q(qa);
    } catch (const error&) {
        fa = 0.0;
    }
    bool bracketed = false;
    double qb = qa, fb = fa;
    for (int i = 1; i <= n; ++i) {
        qb = ql * std::pow(qh / ql, static_cast<double>(i) / n);
        try {
            fb = f_z_of_q(qb);
        } catch (const error&) {
            fb = 0.0;
        }
        if ((fa - f_z) * (fb - f_z) <= 0.0 && fa > 0.0 && fb > 0.0) {
            bracketed = true;
            break;
        }
        qa = qb;
        fa = fb;
    }
    if (!bracketed)
        throw no_solution_error("invert_magnet_params: target f_z unreachable in the search box");
    for (int it = 0; it < 120; ++it) {
        const double qm = std::sqrt(qa * qb);
        const double fm = f_z_of_q(qm);
        if ((fa - f_z) * (fm - f_z) <= 0.0) {
            qb = qm;
        } else {
            qa = qm;
            fa = fm;
        }
        if (qb / qa - 1.0 < 1e-14) break;
    }
    const double q = std::sqrt(qa * qb);
    const double r = trap::detail::find_equilibrium_radius(q, 1.0, g, a, 1e-6 * a,
                                                           a * (1.0 - 1e-6));
    // (2 pi f_beta)^2 = 5 q f(r) r^2 / (R^2 a^2)  =>  R
    const double wb2 = std::pow(2.0 * constants::pi * f_beta, 2);
    const double R = std::sqrt(5.0 * q * trap::detail::image_factor(r, a) * r * r / (a * a * wb2));
    const double M = std::sqrt(3.0 * rho * q / (constants::mu0 * R * R * R));
    return {R, M};
}

} // namespace detail

/// Invert (f_z, f_beta) for (R, M). Newton in (log R, log M) on
/// log-frequency residuals, seeded by the exact 1-D reduction; the result
/// reproduces the target frequencies to relative 1e-9 or better.
inline std::array<double, 2> invert_magnet_params(double f_z_hz, double f_beta_hz,
                                                  double density_kg_m3, double cavity_radius_m,
                                                  double gravity_m_s2,
                                                  const SearchBox& box = {}) {
    if (!(f_z_hz > 0.0) || !(f_beta_hz > 0.0) || !(density_kg_m3 > 0.0) ||
        !(cavity_radius_m > 0.0) || !(gravity_m_s2 > 0.0))
        throw invalid_input("invert_magnet_params: all inputs must be > 0");
    const detail::Forward fwd{density_kg_m3, cavity_radius_m, gravity_m_s2};

    std::array<double, 2> p;
    try {
        p = detail::reduced_guess(f_z_hz, f_beta_hz, density_kg_m3, cavity_radius_m, gravity_m_s2,
                                  box);
    } catch (const no_equilibrium_error&) {
        throw no_solution_error("invert_magnet_params: no levitating solution in the search box");
    }
    p[0] = std::clamp(p[0], box.radius_min_m, box.radius_max_m);
    p[1] = std::clamp(p[1], box.magnetization_min_a_m, box.magnetization_max_a_m);

    double lr = std::log(p[0]), lm = std::log(p[1]);
    const double tol = 1e-12;
    constexpr int max_iter = 60;
    for (int it = 0; it < max_iter; ++it) {
        const auto f0 = fwd(std::exp(lr), std::exp(lm));
        const double r1 = std::log(f0[0] / f_z_hz);
        const double r2 = std::log(f0[1] / f_beta_hz);
        if (std::max(std::fabs(r1), std::fabs(r2)) < tol) return {std::exp(lr), std::exp(lm)};

        const double h = 1e-7;
        const auto fr = fwd(std::exp(lr + h), std::exp(lm));
        const auto fm = fwd(std::exp(lr), std::exp(lm + h));
        const double j11 = std::log(fr[0] / f0[0]) / h, j12 = std::log(fm[0] / f0[0]) / h;
        const double j21 = std::log(fr[1] / f0[1]) / h, j22 = std::log(fm[1] / f0[1]) / h;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det))
            throw convergence_error("invert_magnet_params: singular Jacobian");
        double dlr = -(j22 * r1 - j12 * r2) / det;
        double dlm = -(-j21 * r1 + j11 * r2) / det;
        const double maxstep = 0.5; // trust region in log space
        const double scale = std::max({1.0, std::fabs(dlr) / maxstep, std::fabs(dlm) / maxstep});
        lr += dlr / scale;
        lm += dlm / scale;
        lr = std::clamp(lr, std::log(box.radius_min_m), std::log(box.radius_max_m));
        lm = std::clamp(lm, std::log(box.magnetization_min_a_m),
                        std::log(box.magnetization_max_a_m));
    }
    throw convergence_error("invert_magnet_params: Newton iteration cap reached");
}

struct UncertaintyOptions {
    UncertaintyMethod method = UncertaintyMethod::linear;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0x5eed;
    unsigned n_threads = 0; // 0 = hardware concurrency
    double max_failed_fraction = 0.01;
};

/// Propagate the five input uncertainties (f_z, f_beta, rho, a, g) through
/// the inversion. Inputs are treated as independent. The linear method uses
/// finite differences at +-sigma/10; Monte Carlo draws independent normals
/// with counter-based seeding (reproducible for a fixed seed regardless of
/// thread count).
inline InversionResult propagate_uncertainty(const MeasuredInput& f_z, const MeasuredInput& f_beta,
                                             const MeasuredInput& density,
                                             const MeasuredInput& cavity_radius,
                                             const MeasuredInput& gravity,
                                             const UncertaintyOptions& opt = {},
                                             const SearchBox& box = {}) {
    const std::array<MeasuredInput, 5> in = {f_z, f_beta, density, cavity_radius, gravity};
    for (const auto& m : in) m.validate();
    auto invert_at = [&](const std::array<double, 5>& x) {
        return invert_magnet_params(x[0], x[1], x[2], x[3], x[4], box);
    };
    const std::array<double, 5> x0 = {f_z.value, f_beta.value, density.value, cavity_radius.value,
                                      gravity.value};
    const auto central = invert_at(x0);

    InversionResult out;
    out.radius_m = central[0];
    out.magnetization_a_m = central[1];

    if (opt.method == UncertaintyMethod::linear) {
        double var_r = 0.0, var_m = 0.0, cov_rm = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            if (in[i].sigma == 0.0) continue;
            const double h = in[i].sigma / 10.0;
            auto xp = x0, xm = x0;
            xp[i] += h;
            xm[i] -= h;
            const auto pp = invert_at(xp);
            const auto pm = invert_at(xm);
            const double jr = (pp[0] - pm[0]) / (2.0 * h);
            const double jm = (pp[1] - pm[1]) / (2.0 * h);
            var_r += jr * jr * in[i].sigma * in[i].sigma;
            var_m += jm * jm * in[i].sigma * in[i].sigma;
            cov_rm += jr * jm * in[i].sigma * in[i].sigma;
        }
        out.sigma_radius_m = std::sqrt(var_r);
        out.sigma_magnetization_a_m = std::sqrt(var_m);
        out.correlation_rm = (var_r > 0.0 && var_m > 0.0)
                                 ? cov_rm / (out.sigma_radius_m * out.sigma_magnetization_a_m)
                                 : 0.0;
        return out;
    }

    if (opt.n_samples < 1000)
        throw invalid_input("propagate_uncertainty: monte_carlo requires n_samples >= 1000");
    const std::size_t n = opt.n_samples;
    std::vector<double> rs(n, std::nan("")), ms(n, std::nan(""));
    const std::uint64_t key = rng::derive_key(opt.seed, 0x1777);
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            std::array<double, 5> x;
            for (std::size_t i = 0; i < 5; ++i)
                x[i] = x0[i] + in[i].sigma * rng::normal(key, k * 5 + i);
            try {
                const auto p = invert_at(x);
                rs[k] = p[0];
                ms[k] = p[1];
            } catch (const error&) {
                // left as NaN, counted below
            }
        }
    };
    unsigned nt = opt.n_threads ? opt.n_threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, 16);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();

    double sr = 0, sm = 0;
    std::size_t good = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::isfinite(rs[k])) {
            sr += rs[k];
            sm += ms[k];
            ++good;
        }
    out.failed_fraction = static_cast<double>(n - good) / static_cast<double>(n);
    out.n_samples = n;
    if (out.failed_fraction > opt.max_failed_fraction)
        throw convergence_error("propagate_uncertainty: more than the allowed fraction of "
                                "Monte-Carlo draws failed to invert");
    const double mr = sr / static_cast<double>(good), mm = sm / static_cast<double>(good);
    double vr = 0, vm = 0, cv = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::isfinite(rs[k])) {
            vr += (rs[k] - mr) * (rs[k] - mr);
            vm += (ms[k] - mm) * (ms[k] - mm);
            cv += (rs[k] - mr) * (ms[k] - mm);
        }
    const double dof = static_cast<double>(good) - 1.0;
    out.sigma_radius_m = std::sqrt(vr / dof);
    out.sigma_magnetization_a_m = std::sqrt(vm / dof);
    out.correlation_rm = cv / std::sqrt(vr * vm);
    return out;
}

struct QuadraturePoint {
    double f_alpha_hz = 0.0;
    double f_shifted_hz = 0.0; // the trapped-field-shifted mode frequency
    double sigma_hz = 1.0;
};

struct QuadratureFit {
    double f_intrinsic_hz = 0.0;
    double sigma_hz = 0.0;
};

/// Weighted one-parameter fit of f' = sqrt(f_intrinsic^2 + f_alpha^2).
/// Also used for the z mode, which obeys the same quadrature shift.
inline QuadratureFit fit_intrinsic_beta(const std::vector<QuadraturePoint>& points) {
    if (points.empty()) throw invalid_input("fit_intrinsic_beta: no points");
    bool all_same = true, weighted = false;
    for (const auto& p : points) {
        if (p.f_alpha_hz != points.front().f_alpha_hz) all_same = false;
        if (p.sigma_hz > 0.0 && p.sigma_hz != 1.0) weighted = true;
        if (p.sigma_hz < 0.0) throw invalid_input("fit_intrinsic_beta: negative sigma");
    }
    auto weight = [](const QuadraturePoint& p) {
        return p.sigma_hz > 0.0 ? 1.0 / (p.sigma_hz * p.sigma_hz) : 1.0;
    };
    if (all_same && points.front().f_alpha_hz == 0.0) {
        // model reduces to a constant: weighted mean
        double sw = 0, swy = 0;
        for (const auto& p : points) {
            sw += weight(p);
            swy += weight(p) * p.f_shifted_hz;
        }
        const double mean = swy / sw;
        double chi2 = 0;
        for (const auto& p : points) chi2 += weight(p) * std::pow(p.f_shifted_hz - mean, 2);
        double var = 1.0 / sw;
        if (!weighted && points.size() > 1)
            var *= chi2 / (static_cast<double>(points.size()) - 1.0);
        return {mean, std::sqrt(var)};
    }
    if (all_same && points.size() > 1)
        throw degenerate_fit_error(
            "fit_intrinsic_beta: all f_alpha identical and nonzero; quadrature model "
            "unconstrained");

    // initial value from the weighted mean of max(f'^2 - f_alpha^2, 0)
    double sw = 0, swq = 0;
    for (const auto& p : points) {
        sw += weight(p);
        swq += weight(p) * std::max(p.f_shifted_hz * p.f_shifted_hz - p.f_alpha_hz * p.f_alpha_hz,
                                    0.0);
    }
    double b = std::sqrt(std::max(swq / sw, 1e-12));
    for (int it = 0; it < 200; ++it) {
        double jtj = 0, jtr = 0;
        for (const auto& p : points) {
            const double m = std::hypot(b, p.f_alpha_hz);
            const double j = b / m;
            const double r = p.f_shifted_hz - m;
            jtj += weight(p) * j * j;
            jtr += weight(p) * j * r;
        }
        if (jtj == 0.0) throw degenerate_fit_error("fit_intrinsic_beta: zero sensitivity");
        const double step = jtr / jtj;
        b = std::fabs(b + step);
        if (std::fabs(step) < 1e-14 * std::max(b, 1.0)) break;
    }
    double jtj = 0, chi2 = 0;
    for (const auto& p : points) {
        const double m = std::hypot(b, p.f_alpha_hz);
        jtj += weight(p) * (b / m) * (b / m);
        chi2 += weight(p) * std::pow(p.f_shifted_hz - m, 2);
    }
    double var = 1.0 / jtj;
    if (!weighted && points.size() > 1) var *= chi2 / (static_cast<double>(points.size()) - 1.0);
    return {b, std::sqrt(var)};
}

/// Stokes-regime radius from the viscous linewidth: R = sqrt(15 eta / (2 pi rho df)).
inline double radius_from_viscous_linewidth(double linewidth_hz, double viscosity_pa_s,
                                            double density_kg_m3) {
    if (!(linewidth_hz > 0.0) || !(viscosity_pa_s > 0.0) || !(density_kg_m3 > 0.0))
        throw invalid_input("radius_from_viscous_linewidth: inputs must be > 0");
    return std::sqrt(15.0 * viscosity_pa_s /
                     (2.0 * constants::pi * density_kg_m3 * linewidth_hz));
}

/// Forward form of the same relation: df = 15 eta / (2 pi rho R^2).
inline double viscous_linewidth_from_radius(double radius_m, double viscosity_pa_s,
                                            double density_kg_m3) {
    if (!(radius_m > 0.0) || !(viscosity_pa_s > 0.0) || !(density_kg_m3 > 0.0))
        throw invalid_input("viscous_linewidth_from_radius: inputs must be > 0");
    return 15.0 * viscosity_pa_s / (2.0 * constants::pi * density_kg_m3 * radius_m * radius_m);
}

inline double knudsen_number(double mean_free_path_m, double radius_m) {
    if (!(mean_free_path_m >= 0.0) || !(radius_m > 0.0))
        throw invalid_input("knudsen_number: requires l >= 0 and R > 0");
    return mean_free_path_m / radius_m;
}

} // namespace levmag::inversion
