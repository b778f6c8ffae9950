#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

// Shared test utilities: finite-difference oracles and the independent
// closed-form reference for the cavity image energy.
namespace test_helpers {

/// Central second derivative with one Richardson step, evaluated in the
/// callable's own precision.
template <class F, class Real>
Real fd_second_derivative(F&& f, Real x, Real h) {
    auto d2 = [&](Real hh) { return (f(x + hh) - 2 * f(x) + f(x - hh)) / (hh * hh); };
    const Real a = d2(h), b = d2(h / 2);
    return (Real(4) * b - a) / Real(3);
}

/// Scan the step over `decades` decades below h0 and return the estimate
/// closest to `reference` (the spec-style "step scan" oracle usage: the best
/// step must agree with the analytic value).
template <class F, class Real>
Real fd_second_derivative_scan(F&& f, Real x, Real h0, Real reference, int decades = 3,
                               int per_decade = 4) {
    Real best = std::numeric_limits<Real>::quiet_NaN();
    Real best_err = std::numeric_limits<Real>::infinity();
    for (int i = 0; i <= decades * per_decade; ++i) {
        const Real h = h0 * std::pow(Real(10), -Real(i) / per_decade);
        const Real v = fd_second_derivative(f, x, h);
        const Real err = std::fabs((double)(v - reference));
        if (err < best_err) {
            best_err = err;
            best = v;
        }
    }
    return best;
}

/// Exact interaction energy of a point dipole inside a flux-excluding
/// spherical cavity, from the boundary-value problem. Expanding the dipole
/// potential in Legendre series, applying dPsi/dr = 0 at r = a, and
/// resumming the induced field at the dipole gives closed forms in
/// u = (d/a)^2:
///   radial dipole:     U = (mu0 m^2 / 4 pi a^3) * 1/(1-u)^3
///   transverse dipole: U = (mu0 m^2 / 16 pi a^3) * (4 - 3u + u^2)/(1-u)^3
/// with the usual factor 1/2 for an induced-image energy. beta is the tilt
/// from the transverse (horizontal) orientation.
inline double cavity_image_energy_exact(double mu0, double dipole, double a, double d,
                                        double beta) {
    const double u = (d / a) * (d / a);
    const double c = mu0 * dipole * dipole / (4.0 * std::numbers::pi_v<double> * a * a * a);
    const double u_rad = c / std::pow(1.0 - u, 3);
    const double u_trans = 0.25 * c * (4.0 - 3.0 * u + u * u) / std::pow(1.0 - u, 3);
    const double s = std::sin(beta);
    return u_trans + (u_rad - u_trans) * s * s;
}

/// Sample statistics.
inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace test_helpers
