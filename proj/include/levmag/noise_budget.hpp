#pragma once

#include <cmath>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"

// Forward noise modeling: thermal torque noise, equivalent magnetic field
// PSD, energy resolution in units of hbar, the ERL reference level, and
// SQUID back-action projections. All PSDs are one-sided.
namespace levmag::noise {

/// Thermal torque PSD S_tau = 4 k_B T I w0 / Q  [N^2 m^2 / Hz].
inline double thermal_torque_psd(double temperature_k, double inertia_kg_m2, double omega0_rad_s,
                                 double quality_factor) {
    if (!(temperature_k > 0.0) || !(inertia_kg_m2 > 0.0) || !(omega0_rad_s > 0.0) ||
        !(quality_factor > 0.0))
        throw invalid_input("thermal_torque_psd: inputs must be > 0");
    return 4.0 * constants::boltzmann * temperature_k * inertia_kg_m2 * omega0_rad_s /
           quality_factor;
}

/// Equivalent field PSD S_B = S_tau / (mu sin(theta1))^2  [T^2 / Hz].
inline double field_psd_from_torque(double s_tau, double dipole_a_m2, double theta1_rad) {
    if (!(dipole_a_m2 > 0.0)) throw invalid_input("field_psd_from_torque: mu must be > 0");
    const double s = std::sin(theta1_rad);
    if (s == 0.0)
        throw invalid_input("field_psd_from_torque: theta1 = 0 has no torque coupling");
    return s_tau / (dipole_a_m2 * dipole_a_m2 * s * s);
}

/// Energy resolution E_R = S_B V / (2 mu0), returned in units of hbar.
inline double energy_resolution(double s_b, double volume_m3) {
    if (!(s_b > 0.0) || !(volume_m3 > 0.0))
        throw invalid_input("energy_resolution: inputs must be > 0");
    return s_b * volume_m3 / (2.0 * constants::mu0 * constants::hbar);
}

/// Field PSD at which E_R = hbar for a given sensing volume.
inline double erl_field_psd(double volume_m3) {
    if (!(volume_m3 > 0.0)) throw invalid_input("erl_field_psd: volume must be > 0");
    return 2.0 * constants::mu0 * constants::hbar / volume_m3;
}

/// SQUID back-action referred to field at the magnet:
/// S_B = excess * (2 hbar L_i / L_t^2) * lambda^2. The excess factor is a
/// power ratio (1 = quantum limited).
inline double squid_backaction_field_psd(double input_inductance_h, double total_inductance_h,
                                         double lambda_t_per_a, double excess_power_factor = 1.0) {
    if (!(input_inductance_h > 0.0) || !(total_inductance_h > 0.0) || !(lambda_t_per_a > 0.0))
        throw invalid_input("squid_backaction_field_psd: inductances and lambda must be > 0");
    if (!(excess_power_factor >= 1.0))
        throw invalid_input("squid_backaction_field_psd: excess factor must be >= 1");
    const double s_i = 2.0 * constants::hbar * input_inductance_h /
                       (total_inductance_h * total_inductance_h);
    return excess_power_factor * s_i * lambda_t_per_a * lambda_t_per_a;
}

struct NoiseReport {
    double s_tau = 0.0;              // N^2 m^2 / Hz
    double s_b_thermal = 0.0;        // T^2 / Hz
    double s_b_backaction = 0.0;     // T^2 / Hz
    double s_b_total = 0.0;          // T^2 / Hz
    double sqrt_s_b_total = 0.0;     // T / sqrt(Hz)
    double e_r_hbar = 0.0;           // total, units of hbar
    double e_r_thermal_hbar = 0.0;
    double e_r_backaction_hbar = 0.0;
    double erl_s_b = 0.0;            // T^2 / Hz at E_R = hbar
};

struct BackactionInputs {
    double input_inductance_h = 0.0;
    double total_inductance_h = 0.0;
    double lambda_t_per_a = 0.0;
    double excess_power_factor = 1.0;
    bool enabled = false;
};

/// Assemble the full budget. Components add in power; E_R is consistent
/// with S_B and V through the energy-resolution relation by construction.
inline NoiseReport make_noise_report(double temperature_k, double inertia_kg_m2,
                                     double omega0_rad_s, double quality_factor,
                                     double dipole_a_m2, double theta1_rad, double volume_m3,
                                     const BackactionInputs& ba = {}) {
    NoiseReport rep;
    rep.s_tau = thermal_torque_psd(temperature_k, inertia_kg_m2, omega0_rad_s, quality_factor);
    rep.s_b_thermal = field_psd_from_torque(rep.s_tau, dipole_a_m2, theta1_rad);
    rep.s_b_backaction =
        ba.enabled ? squid_backaction_field_psd(ba.input_inductance_h, ba.total_inductance_h,
                                                ba.lambda_t_per_a, ba.excess_power_factor)
                   : 0.0;
    rep.s_b_total = rep.s_b_thermal + rep.s_b_backaction;
    rep.sqrt_s_b_total = std::sqrt(rep.s_b_total);
    rep.e_r_hbar = energy_resolution(rep.s_b_total, volume_m3);
    rep.e_r_thermal_hbar = energy_resolution(rep.s_b_thermal, volume_m3);
    rep.e_r_backaction_hbar =
        rep.s_b_backaction > 0.0 ? energy_resolution(rep.s_b_backaction, volume_m3) : 0.0;
    rep.erl_s_b = erl_field_psd(volume_m3);
    return rep;
}

} // namespace levmag::noise
