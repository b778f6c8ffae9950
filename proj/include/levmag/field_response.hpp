#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"
#include "levmag/fit.hpp"
#include "levmag/trap_model.hpp"
#include "levmag/types.hpp"

// Alpha-mode frequency versus applied coil current: the shared-B0 two-coil
// model, its weighted nonlinear fit, and the torque exerted by an applied
// field.
namespace levmag::field {

/// |B0 + B1| with B1 = lambda * I at angle theta to B0. Currents may be
/// negative (field reversal).
inline double total_field_magnitude(double b0_t, const CoilCalibration& coil, double current_a) {
    if (b0_t < 0.0) throw invalid_input("total_field_magnitude: B0 must be >= 0");
    coil.validate();
    const double b1 = coil.lambda_t_per_a * current_a;
    const double sq = b0_t * b0_t + b1 * b1 + 2.0 * b0_t * b1 * std::cos(coil.theta_rad);
    return std::sqrt(std::max(sq, 0.0));
}

/// f_alpha(I): alpha frequency in the combined field.
inline double alpha_freq_vs_current(const MagnetParams& magnet, double b0_t,
                                    const CoilCalibration& coil, double current_a) {
    const DerivedMagnet d = trap::derived_properties(magnet);
    return trap::alpha_frequency(d.dipole_a_m2, total_field_magnitude(b0_t, coil, current_a),
                                 d.inertia_kg_m2);
}

/// Torque magnitude on the dipole from a field B1 at angle theta1.
inline double torque_from_field(double dipole_a_m2, double b1_t, double theta1_rad) {
    return dipole_a_m2 * b1_t * std::sin(theta1_rad);
}

struct CoilSweepPoint {
    int coil_id = 1; // 1 or 2
    double current_a = 0.0;
    double f_alpha_hz = 0.0;
    double sigma_hz = 1e-3; // ringdown-precision default when the CSV omits it
};

struct CoilFitResult {
    double b0_t = 0.0, sigma_b0_t = 0.0;
    std::array<CoilCalibration, 2> coils{}; // carries sigmas per coil
    linalg::Matrix covariance;              // 5x5, order (B0, th1, lam1, th2, lam2)
    double reduced_chi2 = 0.0;
    bool degenerate = false; // near-singular normal matrix (e.g. B0 ~ 0)
    double condition = 0.0;
    // the coil angles only determine the inter-coil angle up to reflection
    double inter_coil_angle_diff_rad = 0.0;
    double inter_coil_angle_sum_rad = 0.0;
    int iterations = 0;
};

enum class CoilFitObservable { frequency, frequency_squared };

namespace detail {

inline double canonical_angle(double theta) {
    double t = std::fmod(theta, 2.0 * constants::pi);
    if (t < 0.0) t += 2.0 * constants::pi;
    if (t > constants::pi) t = 2.0 * constants::pi - t; // cos(theta) symmetry
    return t;
}

inline double coil_model_f(double mu, double inertia, double b0, double theta, double lambda,
                           double current) {
    const double b1 = lambda * current;
    const double b2 = b0 * b0 + b1 * b1 + 2.0 * b0 * b1 * std::cos(theta);
    return std::sqrt(mu * std::sqrt(std::max(b2, 0.0)) / inertia) / (2.0 * constants::pi);
}

} // namespace detail

/// Weighted nonlinear least squares of the 5 field parameters
/// (B0, theta1, lambda1, theta2, lambda2); both coils share one B0.
/// mu and I are fixed, known inputs. Initial guesses come from a coarse
/// theta grid, the large-current slope of f^2 vs |I|, and f(I~0).
inline CoilFitResult fit_coil_calibration(const std::vector<CoilSweepPoint>& data,
                                          const MagnetParams& magnet,
                                          CoilFitObservable observable = CoilFitObservable::frequency) {
    if (data.size() < 5)
        throw invalid_input("fit_coil_calibration: need at least 5 points across both coils");
    const DerivedMagnet d = trap::derived_properties(magnet);
    const double mu = d.dipole_a_m2, inertia = d.inertia_kg_m2;

    for (const auto& p : data)
        if (p.coil_id != 1 && p.coil_id != 2)
            throw invalid_input("fit_coil_calibration: coil_id must be 1 or 2");
    for (int c = 1; c <= 2; ++c) {
        double imin = 1e300, imax = -1e300;
        bool any = false;
        for (const auto& p : data)
            if (p.coil_id == c) {
                imin = std::min(imin, p.current_a);
                imax = std::max(imax, p.current_a);
                any = true;
            }
        if (any && imax - imin <= 0.0)
            throw degenerate_fit_error("fit_coil_calibration: all currents equal for coil " +
                                       std::to_string(c));
    }

    // --- initial guesses ---
    // B0 from the point nearest zero current
    double f_at_0 = 0.0, best = 1e300;
    for (const auto& p : data)
        if (std::fabs(p.current_a) < best) {
            best = std::fabs(p.current_a);
            f_at_0 = p.f_alpha_hz;
        }
    const double w0 = 2.0 * constants::pi * f_at_0;
    double b0_init = std::max(w0 * w0 * inertia / mu, 1e-12);

    // lambda_c from the slope of f^2 vs |I| at the largest currents
    std::array<double, 2> lam_init = {1e-4, 1e-4};
    for (int c = 1; c <= 2; ++c) {
        double i1 = 0.0, f1 = 0.0;
        for (const auto& p : data)
            if (p.coil_id == c && std::fabs(p.current_a) > std::fabs(i1)) {
                i1 = p.current_a;
                f1 = p.f_alpha_hz;
            }
        if (i1 != 0.0) {
            const double slope = std::fabs((2.0 * constants::pi * f1) *
                                           (2.0 * constants::pi * f1) -
                                           w0 * w0) /
                                 std::fabs(i1);
            lam_init[c - 1] = std::max(slope * inertia / mu, 1e-9);
        }
    }

    auto residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
        r.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& pt = data[i];
            const double th = pt.coil_id == 1 ? p[1] : p[3];
            const double lm = pt.coil_id == 1 ? p[2] : p[4];
            const double fm = detail::coil_model_f(mu, inertia, p[0], th, lm, pt.current_a);
            const double sg = pt.sigma_hz > 0.0 ? pt.sigma_hz : 1e-3;
            if (observable == CoilFitObservable::frequency)
                r[i] = (fm - pt.f_alpha_hz) / sg;
            else
                r[i] = (fm * fm - pt.f_alpha_hz * pt.f_alpha_hz) /
                       (2.0 * pt.f_alpha_hz * sg);
        }
    };

    // coarse grid over the angles, fit from the best seed
    const std::array<double, 3> theta_seeds = {15.0, 45.0, 75.0};
    double best_chi2 = 1e300;
    fit::Result best_fit;
    bool have = false;
    for (double t1 : theta_seeds)
        for (double t2 : theta_seeds) {
            std::vector<double> p0 = {b0_init, t1 * constants::pi / 180.0, lam_init[0],
                                      t2 * constants::pi / 180.0, lam_init[1]};
            try {
                fit::Result fr = fit::least_squares(residuals, p0);
                if (fr.chi2 < best_chi2) {
                    best_chi2 = fr.chi2;
                    best_fit = std::move(fr);
                    have = true;
                }
            } catch (const error&) {
                // seed failed; try the next one
            }
        }
    if (!have) throw convergence_error("fit_coil_calibration: no seed converged");

    // canonicalize angles into [0, pi] (the model depends on cos(theta))
    best_fit.params[1] = detail::canonical_angle(best_fit.params[1]);
    best_fit.params[3] = detail::canonical_angle(best_fit.params[3]);
    best_fit.params[0] = std::fabs(best_fit.params[0]);
    best_fit.params[2] = std::fabs(best_fit.params[2]);
    best_fit.params[4] = std::fabs(best_fit.params[4]);

    CoilFitResult out;
    out.b0_t = best_fit.params[0];
    out.sigma_b0_t = std::sqrt(std::max(best_fit.covariance[0], 0.0));
    for (int c = 0; c < 2; ++c) {
        CoilCalibration cc;
        cc.theta_rad = best_fit.params[1 + 2 * c];
        cc.lambda_t_per_a = best_fit.params[2 + 2 * c];
        cc.sigma_theta_rad = std::sqrt(std::max(best_fit.covariance[(1 + 2 * c) * 5 + 1 + 2 * c], 0.0));
        cc.sigma_lambda_t_per_a =
            std::sqrt(std::max(best_fit.covariance[(2 + 2 * c) * 5 + 2 + 2 * c], 0.0));
        out.coils[c] = cc;
    }
    out.covariance = best_fit.covariance;
    out.reduced_chi2 = best_fit.reduced_chi2;
    out.degenerate = best_fit.degenerate;
    out.condition = best_fit.condition;
    out.iterations = best_fit.iterations;
    out.inter_coil_angle_diff_rad = std::fabs(out.coils[0].theta_rad - out.coils[1].theta_rad);
    out.inter_coil_angle_sum_rad = out.coils[0].theta_rad + out.coils[1].theta_rad;
    return out;
}

} // namespace levmag::field
