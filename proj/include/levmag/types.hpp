#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"

namespace levmag {

/// Ferromagnetic microsphere: geometry and material.
struct MagnetParams {
    double radius_m = 0.0;
    double density_kg_m3 = 0.0;
    double magnetization_a_m = 0.0;

    void validate() const {
        if (!(radius_m > 0.0)) throw invalid_input("MagnetParams: radius must be > 0");
        if (!(density_kg_m3 > 0.0)) throw invalid_input("MagnetParams: density must be > 0");
        if (!(magnetization_a_m >= 0.0))
            throw invalid_input("MagnetParams: magnetization must be >= 0");
    }
};

/// Bulk quantities derived from MagnetParams.
struct DerivedMagnet {
    double volume_m3 = 0.0;
    double mass_kg = 0.0;
    double dipole_a_m2 = 0.0;   // mu = M V
    double inertia_kg_m2 = 0.0; // I = 2/5 m R^2 (solid sphere)
};

/// Spherical superconducting trap: hemispherical bottom of radius a.
struct TrapGeometry {
    double cavity_radius_m = 0.0;
    double gravity_m_s2 = 9.80665;

    void validate() const {
        if (!(cavity_radius_m > 0.0)) throw invalid_input("TrapGeometry: cavity radius must be > 0");
        if (!(gravity_m_s2 > 0.0)) throw invalid_input("TrapGeometry: gravity must be > 0");
    }
};

/// Levitation equilibrium. height_m is measured from the cavity bottom
/// along the vertical through the center (z0 = a - r).
struct EquilibriumState {
    double center_distance_m = 0.0; // r_eq, magnet center from cavity center
    double height_m = 0.0;          // z0 = a - r_eq
    double tilt_rad = 0.0;          // beta_eq (0 on the stable branch)
};

/// One actuation coil: field per unit current and angle to the trapped field.
struct CoilCalibration {
    double lambda_t_per_a = 0.0;
    double theta_rad = 0.0;
    double sigma_lambda_t_per_a = 0.0;
    double sigma_theta_rad = 0.0;

    void validate() const {
        if (!(lambda_t_per_a > 0.0)) throw invalid_input("CoilCalibration: lambda must be > 0");
        if (theta_rad < 0.0 || theta_rad > constants::pi)
            throw invalid_input("CoilCalibration: theta must be in [0, pi]");
    }
};

/// Residual static field frozen into the trap (horizontal component).
struct TrappedField {
    double b0_t = 0.0;

    void validate() const {
        if (!(b0_t >= 0.0)) throw invalid_input("TrappedField: B0 must be >= 0");
    }
};

/// A measured quantity with 1-sigma uncertainty.
struct MeasuredInput {
    double value = 0.0;
    double sigma = 0.0;

    void validate() const {
        if (!(sigma >= 0.0)) throw invalid_input("MeasuredInput: sigma must be >= 0");
    }
};

/// Uniformly sampled real-valued record.
struct TimeSeries {
    double sample_rate_hz = 0.0;
    double start_time_s = 0.0;
    std::vector<double> samples;

    void validate() const {
        if (!(sample_rate_hz > 0.0)) throw invalid_input("TimeSeries: sample rate must be > 0");
        for (double v : samples)
            if (!std::isfinite(v)) throw invalid_input("TimeSeries: non-finite sample");
    }
    double duration_s() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / sample_rate_hz;
    }
    double time_at(std::size_t i) const {
        return start_time_s + static_cast<double>(i) / sample_rate_hz;
    }
};

} // namespace levmag
