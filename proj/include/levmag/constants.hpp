#pragma once

#include <numbers>

// Physical constants, SI, CODATA 2018. Values quoted to at least 9
// significant figures; k_B, h, e and c are exact by definition.
namespace levmag::constants {

inline constexpr double pi = std::numbers::pi_v<double>;

/// Boltzmann constant [J/K] (exact).
inline constexpr double boltzmann = 1.380649e-23;

/// Planck constant [J s] (exact).
inline constexpr double planck = 6.62607015e-34;

/// Reduced Planck constant [J s].
inline constexpr double hbar = planck / (2.0 * pi);

/// Vacuum magnetic permeability [N/A^2].
inline constexpr double mu0 = 1.25663706212e-6;

/// Elementary charge [C] (exact).
inline constexpr double elementary_charge = 1.602176634e-19;

/// Speed of light in vacuum [m/s] (exact).
inline constexpr double light_speed = 2.99792458e8;

/// Electronvolt [J] (exact).
inline constexpr double electron_volt = 1.602176634e-19;

/// Fine-structure constant (dimensionless).
inline constexpr double fine_structure = 7.2973525693e-3;

} // namespace levmag::constants
