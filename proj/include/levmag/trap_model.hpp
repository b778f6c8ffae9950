#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"
#include "levmag/types.hpp"

// Analytic model of a magnetized sphere levitated inside a spherical
// superconducting cavity: image-method potential, levitation equilibrium,
// and the z / beta / alpha normal-mode frequencies.
//
// The magnetic part of the potential is the spherical-image closed form
//
//   U_m(r, beta) = (mu0 mu^2 / 4 pi) * a^5 / [(a^2+r^2)(a^2-r^2)^3]
//                  * (1 + (r^2/a^2) sin^2 beta)
//
// with r the distance of the magnet center from the cavity center and beta
// the tilt of the dipole from the horizontal plane. The form is exact for a
// radial dipole (where it reduces to mu0 mu^2 a^3 / 4 pi (a^2-r^2)^3) and
// reproduces the plane-image limit (1 + sin^2 beta)/h^3 as r -> a; against
// a full multipole solution of the boundary-value problem it is accurate to
// ~1% for a horizontal dipole over the radii of interest (see tests).
namespace levmag::trap {

/// V, m, mu, I from the sphere parameters.
inline DerivedMagnet derived_properties(const MagnetParams& magnet) {
    magnet.validate();
    const double r3 = magnet.radius_m * magnet.radius_m * magnet.radius_m;
    DerivedMagnet d;
    d.volume_m3 = 4.0 * constants::pi / 3.0 * r3;
    d.mass_kg = magnet.density_kg_m3 * d.volume_m3;
    d.dipole_a_m2 = magnet.magnetization_a_m * d.volume_m3;
    d.inertia_kg_m2 = 0.4 * d.mass_kg * magnet.radius_m * magnet.radius_m;
    return d;
}

namespace detail {

/// Geometric image factor f(r) = a^5 / [(a^2+r^2)(a^2-r^2)^3].
template <class Real>
Real image_factor(Real r, Real a) {
    const Real a2 = a * a, r2 = r * r;
    const Real dm = a2 - r2;
    return (a2 * a2 * a) / ((a2 + r2) * dm * dm * dm);
}

/// Logarithmic derivative g1 = f'/f.
template <class Real>
Real image_factor_logd(Real r, Real a) {
    const Real a2 = a * a, r2 = r * r;
    return 6 * r / (a2 - r2) - 2 * r / (a2 + r2);
}

/// d(g1)/dr.
template <class Real>
Real image_factor_logd_prime(Real r, Real a) {
    const Real a2 = a * a, r2 = r * r;
    const Real dm = a2 - r2, dp = a2 + r2;
    return 6 * dp / (dm * dm) - 2 * dm / (dp * dp);
}

template <class Real>
void check_inside(Real r, Real a) {
    if (!(r > Real(0)) || !(r < a))
        throw invalid_input("trap: magnet center must satisfy 0 < r < a");
}

} // namespace detail

/// Total potential energy U(r, beta), gravity coordinate z = a - r.
/// Templated so tests can evaluate it in extended precision.
template <class Real>
Real potential_energy_t(Real mu0_mu_sq_over_4pi, Real mass, Real gravity, Real a, Real r,
                        Real beta) {
    detail::check_inside(r, a);
    const Real s = std::sin(beta);
    const Real angular = Real(1) + (r * r) / (a * a) * s * s;
    return mu0_mu_sq_over_4pi * detail::image_factor(r, a) * angular + mass * gravity * (a - r);
}

inline double dipole_prefactor(const DerivedMagnet& d) {
    return constants::mu0 * d.dipole_a_m2 * d.dipole_a_m2 / (4.0 * constants::pi);
}

inline double potential_energy(const MagnetParams& magnet, const TrapGeometry& trap, double r,
                               double beta) {
    trap.validate();
    const DerivedMagnet d = derived_properties(magnet);
    return potential_energy_t<double>(dipole_prefactor(d), d.mass_kg, trap.gravity_m_s2,
                                      trap.cavity_radius_m, r, beta);
}

/// dU/dr at beta = 0 [N].
inline double radial_gradient(const MagnetParams& magnet, const TrapGeometry& trap, double r) {
    trap.validate();
    const DerivedMagnet d = derived_properties(magnet);
    detail::check_inside(r, trap.cavity_radius_m);
    const double a = trap.cavity_radius_m;
    return dipole_prefactor(d) * detail::image_factor(r, a) * detail::image_factor_logd(r, a) -
           d.mass_kg * trap.gravity_m_s2;
}

namespace detail {

struct EquilibriumTolerances {
    double gradient_n = 1e-18; // |dU/dr| at the solution
    double position_m = 1e-12; // r resolved at least this finely
    int scan_points = 512;
};

/// Equilibrium of U0(r) = c_pref f(r) + m g (a - r) on (r_lo, r_hi).
/// Bracket by sign change of U0' on a log-spaced scan, bisect, then polish
/// with Newton on U0'. U0' is monotone on the stable branch, so the bracket
/// is unique when it exists.
inline double find_equilibrium_radius(double c_pref, double mass, double gravity, double a,
                                      double r_lo, double r_hi,
                                      const EquilibriumTolerances& tol = {}) {
    auto grad = [&](double r) {
        return c_pref * image_factor(r, a) * image_factor_logd(r, a) - mass * gravity;
    };
    auto curv = [&](double r) {
        const double g1 = image_factor_logd(r, a);
        return c_pref * image_factor(r, a) * (g1 * g1 + image_factor_logd_prime(r, a));
    };
    if (!(r_lo > 0.0) || !(r_hi > r_lo) || !(r_hi < a))
        throw no_equilibrium_error("trap: no valid radial interval (magnet too large for trap?)");

    const int n = tol.scan_points;
    const double lr0 = std::log(r_lo), lr1 = std::log(r_hi);
    double ra = r_lo, ga = grad(ra);
    if (ga > 0.0)
        throw no_equilibrium_error(
            "trap: dU/dr already positive at the inner bound; equilibrium below the valid range");
    double rb = 0.0, gb = 0.0;
    bool bracketed = false;
    for (int i = 1; i < n; ++i) {
        rb = std::exp(lr0 + (lr1 - lr0) * static_cast<double>(i) / (n - 1));
        gb = grad(rb);
        if (gb >= 0.0) {
            bracketed = true;
            break;
        }
        ra = rb;
        ga = gb;
    }
    if (!bracketed)
        throw no_equilibrium_error(
            "trap: dU/dr has no sign change in (r_lo, r_hi); magnet too heavy or too weakly "
            "magnetized to levitate in the valid range");

    for (int it = 0; it < 200 && (rb - ra) > 0.25 * tol.position_m; ++it) {
        const double rm = 0.5 * (ra + rb);
        if (grad(rm) < 0.0)
            ra = rm;
        else
            rb = rm;
    }
    double r = 0.5 * (ra + rb);
    for (int it = 0; it < 60; ++it) {
        const double g = grad(r);
        const double c = curv(r);
        if (!(c > 0.0)) break;
        const double step = g / c;
        double rn = r - step;
        if (!(rn > ra && rn < rb)) rn = 0.5 * (ra + rb); // keep inside the bracket
        if (grad(rn) < 0.0)
            ra = rn;
        else
            rb = rn;
        r = rn;
        if (std::fabs(step) < 0.5 * std::numeric_limits<double>::epsilon() * r) break;
    }
    if (std::fabs(grad(r)) > tol.gradient_n && (rb - ra) > tol.position_m)
        throw convergence_error("trap: equilibrium search did not reach tolerance");
    return r;
}

} // namespace detail

/// Levitation equilibrium (r_eq, z0 = a - r_eq, beta = 0). The search range
/// (R, a - R) treats the sphere radius as an excluded volume for validity.
inline EquilibriumState find_equilibrium(const MagnetParams& magnet, const TrapGeometry& trap) {
    trap.validate();
    const DerivedMagnet d = derived_properties(magnet);
    const double a = trap.cavity_radius_m;
    const double R = magnet.radius_m;
    if (!(R < a)) throw invalid_input("trap: magnet radius must be smaller than cavity radius");
    const double r = detail::find_equilibrium_radius(dipole_prefactor(d), d.mass_kg,
                                                     trap.gravity_m_s2, a, R, a - R);
    return {r, a - r, 0.0};
}

/// Vertical-mode frequency f_z = (1/2pi) sqrt(U''_zz / m), z = a - r.
inline double mode_frequency_z(const MagnetParams& magnet, const TrapGeometry& trap,
                               const EquilibriumState& eq) {
    trap.validate();
    const DerivedMagnet d = derived_properties(magnet);
    const double a = trap.cavity_radius_m, r = eq.center_distance_m;
    detail::check_inside(r, a);
    const double g1 = detail::image_factor_logd(r, a);
    const double d2u = dipole_prefactor(d) * detail::image_factor(r, a) *
                       (g1 * g1 + detail::image_factor_logd_prime(r, a));
    if (!(d2u > 0.0))
        throw no_equilibrium_error("trap: d2U/dz2 <= 0, not a stable equilibrium");
    return std::sqrt(d2u / d.mass_kg) / (2.0 * constants::pi);
}

/// Librational-mode frequency f_beta = (1/2pi) sqrt(U''_bb / I) at beta = 0.
inline double mode_frequency_beta(const MagnetParams& magnet, const TrapGeometry& trap,
                                  const EquilibriumState& eq) {
    trap.validate();
    const DerivedMagnet d = derived_properties(magnet);
    const double a = trap.cavity_radius_m, r = eq.center_distance_m;
    detail::check_inside(r, a);
    const double d2u =
        2.0 * dipole_prefactor(d) * detail::image_factor(r, a) * (r * r) / (a * a);
    if (!(d2u > 0.0))
        throw no_equilibrium_error("trap: d2U/dbeta2 <= 0, not a stable equilibrium");
    return std::sqrt(d2u / d.inertia_kg_m2) / (2.0 * constants::pi);
}

/// Trapped-field shift of the beta mode: f_beta' = sqrt(f_beta^2 + f_alpha^2).
inline double beta_shifted(double f_beta_intrinsic_hz, double f_alpha_hz) {
    if (f_beta_intrinsic_hz < 0.0 || f_alpha_hz < 0.0)
        throw invalid_input("beta_shifted: frequencies must be >= 0");
    return std::hypot(f_beta_intrinsic_hz, f_alpha_hz);
}

/// Alpha librational frequency f = (1/2pi) sqrt(mu B / I).
inline double alpha_frequency(double dipole_a_m2, double field_t, double inertia_kg_m2) {
    if (!(dipole_a_m2 > 0.0) || !(inertia_kg_m2 > 0.0) || field_t < 0.0)
        throw invalid_input("alpha_frequency: requires mu > 0, I > 0, B >= 0");
    return std::sqrt(dipole_a_m2 * field_t / inertia_kg_m2) / (2.0 * constants::pi);
}

} // namespace levmag::trap
