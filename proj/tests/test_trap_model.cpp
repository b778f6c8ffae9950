#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "levmag/constants.hpp"
#include "levmag/rng.hpp"
#include "levmag/trap_model.hpp"

using namespace levmag;
using Catch::Approx;

namespace {
const MagnetParams kMagnet{20.78e-6, 7430.0, 6.91e5};
const TrapGeometry kTrap{2.5e-3, 9.80674};
} // namespace

TEST_CASE("derived properties of the reference sphere") {
    const DerivedMagnet d = trap::derived_properties(kMagnet);
    CHECK(d.volume_m3 == Approx(3.758592e-14).epsilon(1e-5));
    CHECK(d.mass_kg == Approx(2.792634e-10).epsilon(1e-5));
    CHECK(d.dipole_a_m2 == Approx(2.597187e-8).epsilon(1e-5));
    CHECK(d.inertia_kg_m2 == Approx(4.823532e-20).epsilon(1e-5));
}

TEST_CASE("derived properties scale as powers of the radius") {
    MagnetParams big = kMagnet;
    big.radius_m *= 2.0;
    const auto d1 = trap::derived_properties(kMagnet);
    const auto d2 = trap::derived_properties(big);
    CHECK(d2.volume_m3 == Approx(8.0 * d1.volume_m3));
    CHECK(d2.mass_kg == Approx(8.0 * d1.mass_kg));
    CHECK(d2.dipole_a_m2 == Approx(8.0 * d1.dipole_a_m2));
    CHECK(d2.inertia_kg_m2 == Approx(32.0 * d1.inertia_kg_m2));
}

TEST_CASE("zero magnetization gives zero dipole") {
    MagnetParams m = kMagnet;
    m.magnetization_a_m = 0.0;
    CHECK(trap::derived_properties(m).dipole_a_m2 == 0.0);
}

TEST_CASE("potential is even in beta and grows away from beta = 0") {
    const auto key = rng::derive_key(2024, 7);
    for (int i = 0; i < 200; ++i) {
        const double r = kTrap.cavity_radius_m * (0.05 + 0.9 * rng::uniform(key, 2 * i));
        const double beta = (rng::uniform(key, 2 * i + 1) - 0.5) * constants::pi;
        const double up = trap::potential_energy(kMagnet, kTrap, r, beta);
        const double um = trap::potential_energy(kMagnet, kTrap, r, -beta);
        CHECK(up == um);
        CHECK(up >= trap::potential_energy(kMagnet, kTrap, r, 0.0));
    }
}

TEST_CASE("potential diverges toward the cavity wall") {
    const double a = kTrap.cavity_radius_m;
    const double u1 = trap::potential_energy(kMagnet, kTrap, a * (1.0 - 1e-4), 0.0);
    const double u2 = trap::potential_energy(kMagnet, kTrap, a * (1.0 - 1e-6), 0.0);
    CHECK(u2 > u1);
    CHECK(u2 > 1e6 * trap::potential_energy(kMagnet, kTrap, a * 0.5, 0.0));
}

TEST_CASE("potential rejects positions outside the cavity") {
    CHECK_THROWS_AS(trap::potential_energy(kMagnet, kTrap, 0.0, 0.0), invalid_input);
    CHECK_THROWS_AS(trap::potential_energy(kMagnet, kTrap, -1e-3, 0.0), invalid_input);
    CHECK_THROWS_AS(trap::potential_energy(kMagnet, kTrap, kTrap.cavity_radius_m, 0.0),
                    invalid_input);
}

TEST_CASE("reference levitation height and mode frequencies") {
    const EquilibriumState eq = trap::find_equilibrium(kMagnet, kTrap);
    CHECK(eq.tilt_rad == 0.0);
    CHECK(eq.height_m == Approx(kTrap.cavity_radius_m - eq.center_distance_m));
    // height from the cavity bottom, approx 270 um
    CHECK(eq.height_m == Approx(270e-6).margin(0.15 * 270e-6));
    CHECK(eq.height_m == Approx(272.58e-6).epsilon(1e-3)); // regression

    const double fz = trap::mode_frequency_z(kMagnet, kTrap, eq);
    const double fb = trap::mode_frequency_beta(kMagnet, kTrap, eq);
    CHECK(fz == Approx(59.1).margin(0.1));
    CHECK(fb == Approx(478.3).margin(0.5));
}

TEST_CASE("equilibrium gradient is resolved to tolerance") {
    const EquilibriumState eq = trap::find_equilibrium(kMagnet, kTrap);
    CHECK(std::fabs(trap::radial_gradient(kMagnet, kTrap, eq.center_distance_m)) < 1e-18);
}

TEST_CASE("heavier gravity sinks the magnet") {
    TrapGeometry heavy = kTrap;
    heavy.gravity_m_s2 *= 2.0;
    const double z0 = trap::find_equilibrium(kMagnet, kTrap).height_m;
    const double z1 = trap::find_equilibrium(kMagnet, heavy).height_m;
    CHECK(z1 < z0);
}

TEST_CASE("no equilibrium for a feeble magnet") {
    MagnetParams weak = kMagnet;
    weak.magnetization_a_m = 10.0;
    CHECK_THROWS_AS(trap::find_equilibrium(weak, kTrap), no_equilibrium_error);
}

TEST_CASE("magnet must fit inside the trap") {
    MagnetParams huge = kMagnet;
    huge.radius_m = 3e-3;
    CHECK_THROWS_AS(trap::find_equilibrium(huge, kTrap), invalid_input);
}

TEST_CASE("analytic curvatures match finite differences of the potential") {
    const auto check_at = [](const MagnetParams& m, const TrapGeometry& t) {
        const EquilibriumState eq = trap::find_equilibrium(m, t);
        const DerivedMagnet d = trap::derived_properties(m);
        const long double c = (long double)constants::mu0 * d.dipole_a_m2 * d.dipole_a_m2 /
                              (4.0L * std::numbers::pi_v<long double>);
        const long double a = t.cavity_radius_m;
        const long double mass = d.mass_kg, g = t.gravity_m_s2;
        const long double r0 = eq.center_distance_m;

        const double d2z = std::pow(2.0 * constants::pi * trap::mode_frequency_z(m, t, eq), 2) *
                           d.mass_kg;
        auto u_of_r = [&](long double r) {
            return trap::potential_energy_t<long double>(c, mass, g, a, r, 0.0L);
        };
        const double fd_z = (double)test_helpers::fd_second_derivative_scan(
            u_of_r, r0, (long double)(1e-3 * r0), (long double)d2z);
        CHECK(fd_z == Approx(d2z).epsilon(1e-6));

        const double d2b = std::pow(2.0 * constants::pi * trap::mode_frequency_beta(m, t, eq), 2) *
                           d.inertia_kg_m2;
        auto u_of_b = [&](long double b) {
            return trap::potential_energy_t<long double>(c, mass, g, a, r0, b);
        };
        const double fd_b = (double)test_helpers::fd_second_derivative_scan(
            u_of_b, 0.0L, 0.3L, (long double)d2b);
        CHECK(fd_b == Approx(d2b).epsilon(1e-6));
    };
    check_at(kMagnet, kTrap);
    check_at(MagnetParams{8e-6, 7430.0, 2e5}, kTrap);
    check_at(MagnetParams{60e-6, 7430.0, 8e5}, TrapGeometry{4e-3, 9.81});
}

TEST_CASE("image model against the exact boundary-value solution") {
    // The production form is exact for a radial dipole and accurate to a few
    // percent for a horizontal one; the closed-form reference comes from the
    // independent multipole route.
    const DerivedMagnet d = trap::derived_properties(kMagnet);
    const double a = kTrap.cavity_radius_m;
    const double mg_ref = 0.0; // compare the magnetic part only
    (void)mg_ref;
    for (double frac : {0.3, 0.5, 0.7, 0.891, 0.95}) {
        const double r = frac * a;
        const double u_model_rad =
            trap::potential_energy(kMagnet, kTrap, r, constants::pi / 2.0) -
            d.mass_kg * kTrap.gravity_m_s2 * (a - r);
        const double u_exact_rad = test_helpers::cavity_image_energy_exact(
            constants::mu0, d.dipole_a_m2, a, r, constants::pi / 2.0);
        CHECK(u_model_rad == Approx(u_exact_rad).epsilon(1e-12));

        const double u_model_h = trap::potential_energy(kMagnet, kTrap, r, 0.0) -
                                 d.mass_kg * kTrap.gravity_m_s2 * (a - r);
        const double u_exact_h = test_helpers::cavity_image_energy_exact(
            constants::mu0, d.dipole_a_m2, a, r, 0.0);
        CHECK(u_model_h == Approx(u_exact_h).epsilon(0.04));
    }
}

TEST_CASE("beta mode shift by the trapped field") {
    CHECK(trap::beta_shifted(478.3, 0.0) == 478.3);
    CHECK(trap::beta_shifted(0.0, 137.0) == 137.0);
    CHECK(trap::beta_shifted(478.3, 137.625) == Approx(497.70627).epsilon(1e-6));
    const auto key = rng::derive_key(11, 3);
    for (int i = 0; i < 100; ++i) {
        const double fb = 1000.0 * rng::uniform(key, 2 * i);
        const double fa = 1000.0 * rng::uniform(key, 2 * i + 1);
        const double fs = trap::beta_shifted(fb, fa);
        CHECK(fs * fs - fa * fa == Approx(fb * fb).margin(1e-7 * fs * fs));
    }
}

TEST_CASE("alpha frequency from the trapped field") {
    CHECK(trap::alpha_frequency(2.60e-8, 1.38e-6, 4.82e-20) == Approx(137.316).epsilon(1e-4));
    CHECK(trap::alpha_frequency(2.60e-8, 0.0, 4.82e-20) == 0.0);
    CHECK(trap::alpha_frequency(2.60e-8, 4.0 * 1.38e-6, 4.82e-20) ==
          Approx(2.0 * trap::alpha_frequency(2.60e-8, 1.38e-6, 4.82e-20)).epsilon(1e-12));
}
