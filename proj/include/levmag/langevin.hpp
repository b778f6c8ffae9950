#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"
#include "levmag/rng.hpp"
#include "levmag/signal_analysis.hpp"
#include "levmag/trap_model.hpp"
#include "levmag/types.hpp"

// Stochastic time-domain simulation of the alpha librational mode:
//   I th'' + gamma th' + kappa th = tau_thermal(t) + tau_drive(t)
// with gamma = I w0 / Q and white thermal torque of one-sided PSD
// 4 k_B T gamma. The system is linear, so each step applies the exact
// matrix-exponential propagator and draws the stochastic increment from the
// exact joint Gaussian of (theta, theta_dot) over one step; there is no
// step-size bias at any Q. A coherent drive enters through its exact
// steady-state particular solution. Randomness is counter-based, keyed by
// (seed, step), so output is bit-identical for a fixed seed regardless of
// scheduling.
namespace levmag::sim {

struct Drive {
    double amplitude_t = 0.0; // field amplitude B1
    double theta_rad = constants::pi / 2.0;
    double frequency_hz = 0.0;
    double phase_rad = 0.0;
};

enum class InitialState {
    stationary, // thermal draw; with a drive, the driven steady state
    given       // explicit (angle, velocity)
};

struct SimConfig {
    MagnetParams magnet;
    // stiffness source: trapped field B0 (kappa = mu B0) or explicit kappa
    double b0_t = -1.0;
    double stiffness_n_m_rad = -1.0;
    double quality_factor = 0.0;
    double temperature_k = 0.0;
    double sample_rate_hz = 0.0;
    double duration_s = 0.0;
    std::optional<Drive> drive;
    double detector_coupling = 1.0;  // output units per rad
    double detector_noise_psd = 0.0; // output^2/Hz, one-sided, white
    std::uint64_t seed = 1;
    InitialState initial = InitialState::stationary;
    double initial_angle_rad = 0.0;
    double initial_velocity_rad_s = 0.0;

    struct Derived {
        double dipole, inertia, kappa, omega0, gamma, f0;
    };
    Derived derive() const {
        magnet.validate();
        const DerivedMagnet d = trap::derived_properties(magnet);
        double kappa;
        if (stiffness_n_m_rad > 0.0 && b0_t >= 0.0)
            throw invalid_input("SimConfig: give either B0 or an explicit stiffness, not both");
        if (stiffness_n_m_rad > 0.0)
            kappa = stiffness_n_m_rad;
        else if (b0_t > 0.0)
            kappa = d.dipole_a_m2 * b0_t;
        else
            throw invalid_input("SimConfig: stiffness source missing (B0 or kappa)");
        const double omega0 = std::sqrt(kappa / d.inertia_kg_m2);
        return {d.dipole_a_m2, d.inertia_kg_m2, kappa, omega0,
                d.inertia_kg_m2 * omega0 / quality_factor, omega0 / (2.0 * constants::pi)};
    }

    void validate() const {
        const Derived dv = derive();
        if (!(quality_factor > 0.5))
            throw invalid_input("SimConfig: Q must be > 1/2 (underdamped)");
        if (!(temperature_k >= 0.0)) throw invalid_input("SimConfig: temperature must be >= 0");
        if (!(duration_s > 0.0)) throw invalid_input("SimConfig: duration must be > 0");
        if (!(sample_rate_hz > 20.0 * dv.f0))
            throw invalid_input("SimConfig: sample rate must exceed 20x the resonance frequency");
        if (!(detector_noise_psd >= 0.0))
            throw invalid_input("SimConfig: detector noise PSD must be >= 0");
    }
};

struct SimOutput {
    TimeSeries angle;    // rad
    TimeSeries detector; // coupling * angle + detector noise
};

namespace detail {

struct Propagator {
    std::array<double, 4> e;   // row-major 2x2 exp(A dt)
    std::array<double, 3> l;   // lower Cholesky of the one-step covariance
    double var_theta, var_vel; // stationary variances kT/kappa, kT/I
};

inline Propagator make_propagator(double omega0, double q, double kappa, double inertia,
                                  double temperature, double dt) {
    const double lam = omega0 / (2.0 * q);
    const double wd = omega0 * std::sqrt(1.0 - 1.0 / (4.0 * q * q));
    const double ex = std::exp(-lam * dt);
    const double c = std::cos(wd * dt), s = std::sin(wd * dt);
    Propagator p;
    p.e = {ex * (c + lam / wd * s), ex * s / wd, -ex * omega0 * omega0 / wd * s,
           ex * (c - lam / wd * s)};
    p.var_theta = temperature > 0.0 ? constants::boltzmann * temperature / kappa : 0.0;
    p.var_vel = temperature > 0.0 ? constants::boltzmann * temperature / inertia : 0.0;
    // one-step covariance from stationarity: S = S_inf - E S_inf E^T
    const double s11 = p.var_theta - (p.e[0] * p.e[0] * p.var_theta + p.e[1] * p.e[1] * p.var_vel);
    const double s12 = -(p.e[0] * p.e[2] * p.var_theta + p.e[1] * p.e[3] * p.var_vel);
    const double s22 = p.var_vel - (p.e[2] * p.e[2] * p.var_theta + p.e[3] * p.e[3] * p.var_vel);
    const double l11 = std::sqrt(std::max(s11, 0.0));
    const double l21 = l11 > 0.0 ? s12 / l11 : 0.0;
    const double l22 = std::sqrt(std::max(s22 - l21 * l21, 0.0));
    p.l = {l11, l21, l22};
    return p;
}

struct ParticularSolution {
    double amp = 0.0, phase = 0.0, omega = 0.0;
    double theta(double t) const { return amp * std::cos(omega * t + phase); }
    double velocity(double t) const { return -amp * omega * std::sin(omega * t + phase); }
};

inline ParticularSolution particular(const SimConfig& cfg, const SimConfig::Derived& dv) {
    ParticularSolution p;
    if (!cfg.drive || cfg.drive->amplitude_t == 0.0) return p;
    const double tau0 = dv.dipole * cfg.drive->amplitude_t * std::sin(cfg.drive->theta_rad);
    p.omega = 2.0 * constants::pi * cfg.drive->frequency_hz;
    const std::complex<double> chi =
        1.0 / std::complex<double>(dv.kappa - dv.inertia * p.omega * p.omega, dv.gamma * p.omega);
    p.amp = tau0 * std::abs(chi);
    p.phase = std::arg(chi) + cfg.drive->phase_rad;
    return p;
}

} // namespace detail

/// Integrate the mode and synthesize the detector channel.
inline SimOutput simulate_alpha_mode(const SimConfig& cfg) {
    cfg.validate();
    const SimConfig::Derived dv = cfg.derive();
    const double dt = 1.0 / cfg.sample_rate_hz;
    const auto prop = detail::make_propagator(dv.omega0, cfg.quality_factor, dv.kappa, dv.inertia,
                                              cfg.temperature_k, dt);
    const auto part = detail::particular(cfg, dv);
    const std::size_t n = static_cast<std::size_t>(std::ceil(cfg.duration_s / dt));

    const std::uint64_t key_th = rng::derive_key(cfg.seed, 1);
    const std::uint64_t key_det = rng::derive_key(cfg.seed, 2);
    const std::uint64_t key_init = rng::derive_key(cfg.seed, 3);

    // homogeneous state; the total is homogeneous + particular
    double th, vel;
    if (cfg.initial == InitialState::given) {
        th = cfg.initial_angle_rad - part.theta(0.0);
        vel = cfg.initial_velocity_rad_s - part.velocity(0.0);
    } else {
        const auto [g1, g2] = rng::normal_pair(key_init, 0);
        th = std::sqrt(prop.var_theta) * g1;
        vel = std::sqrt(prop.var_vel) * g2;
    }

    SimOutput out;
    out.angle.sample_rate_hz = cfg.sample_rate_hz;
    out.detector.sample_rate_hz = cfg.sample_rate_hz;
    out.angle.samples.resize(n);
    out.detector.samples.resize(n);
    const double det_sigma = std::sqrt(cfg.detector_noise_psd * cfg.sample_rate_hz / 2.0);
    const bool thermal = cfg.temperature_k > 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double total = th + part.theta(static_cast<double>(k) * dt);
        out.angle.samples[k] = total;
        double dn = 0.0;
        if (det_sigma > 0.0) dn = det_sigma * rng::normal(key_det, k);
        out.detector.samples[k] = cfg.detector_coupling * total + dn;

        const double nth = prop.e[0] * th + prop.e[1] * vel;
        const double nvel = prop.e[2] * th + prop.e[3] * vel;
        if (thermal) {
            const auto [g1, g2] = rng::normal_pair(key_th, k);
            th = nth + prop.l[0] * g1;
            vel = nvel + prop.l[1] * g1 + prop.l[2] * g2;
        } else {
            th = nth;
            vel = nvel;
        }
    }
    return out;
}

struct ResolutionPoint {
    double current_a = 0.0;
    double amplitude = 0.0; // settled rms lock-in amplitude (detector units)
};

struct ResolutionSweepOptions {
    double noise_bandwidth_hz = 0.0; // required
    double settle_time_constants = 8.0;
    double record_time_s = 0.0; // required
    unsigned n_threads = 0;     // 0 = hardware concurrency
};

/// Synthetic field-resolution dataset: for each drive current, simulate
/// B1 = lambda I through the coil, demodulate the detector output at
/// f_drive, and return the settled rms amplitude. Points start in the
/// driven stationary state (waiting out the mechanical ring-up, ~Q/(pi f0),
/// is implied, not simulated). Each point is seeded independently from
/// (config seed, point index), so the sweep parallelizes deterministically.
inline std::vector<ResolutionPoint> synth_resolution_dataset(const SimConfig& base,
                                                             const std::vector<double>& currents_a,
                                                             const CoilCalibration& coil,
                                                             double f_drive_hz,
                                                             const ResolutionSweepOptions& opt) {
    coil.validate();
    if (!(opt.noise_bandwidth_hz > 0.0) || !(opt.record_time_s > 0.0))
        throw invalid_input("synth_resolution_dataset: bandwidth and record time are required");
    const double tau = signal::lockin_enbw_coefficient(4) / opt.noise_bandwidth_hz;
    const double settle = opt.settle_time_constants * tau;
    if (!(opt.record_time_s + settle > 10.0 * tau))
        throw invalid_input("synth_resolution_dataset: per-point duration must be at least 10 "
                            "lock-in time constants");

    std::vector<ResolutionPoint> out(currents_a.size());
    auto run_point = [&](std::size_t i) {
        SimConfig cfg = base;
        cfg.seed = rng::derive_key(base.seed, 0x9000 + i);
        cfg.duration_s = settle + opt.record_time_s;
        cfg.initial = InitialState::stationary;
        Drive d;
        d.amplitude_t = coil.lambda_t_per_a * currents_a[i];
        d.theta_rad = coil.theta_rad;
        d.frequency_hz = f_drive_hz;
        cfg.drive = d;
        const SimOutput sim = simulate_alpha_mode(cfg);
        const auto demod =
            signal::lockin_demodulate(sim.detector, f_drive_hz, opt.noise_bandwidth_hz);
        out[i] = {currents_a[i], demod.rms_amplitude_after(settle)};
    };

    unsigned nt = opt.n_threads ? opt.n_threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, 16);
    if (nt <= 1 || currents_a.size() <= 1) {
        for (std::size_t i = 0; i < currents_a.size(); ++i) run_point(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < currents_a.size();
                 i = next.fetch_add(1))
                run_point(i);
        });
    for (auto& th : pool) th.join();
    return out;
}

} // namespace levmag::sim
