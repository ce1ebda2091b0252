#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stokes/collisions.hpp"

using namespace stokes;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// natural units: gamma = 1, detuning 30 rad/s, weak drive at the bound
CollisionParams natural_params(double gamma_c, double noise) {
    CollisionParams p;
    p.gamma = 1.0;
    p.gamma_c = gamma_c;
    p.noise_amplitude = noise;
    p.detuning = 30.0;
    p.drive = 3.0;
    return p;
}

TrajectoryConfig natural_cfg(int n_trajectories, uint64_t seed, double dt = 2e-3) {
    TrajectoryConfig cfg;
    cfg.duration = 67.0;
    cfg.dt = dt;
    cfg.n_trajectories = n_trajectories;
    cfg.seed = seed;
    cfg.record_every = 1;
    return cfg;
}

// power-weighted centroid of the spectrum within +-2 half-widths of the
// incoherent argmax (coherent window excluded)
double incoherent_centroid(const EmissionSpectrum& spec, double window_hz, double halfwidth_hz) {
    size_t arg = 0;
    double best = -1.0;
    for (size_t k = 0; k < spec.offset_hz.size(); ++k) {
        if (std::abs(spec.offset_hz[k]) <= window_hz) continue;
        if (spec.density[k] > best) {
            best = spec.density[k];
            arg = k;
        }
    }
    double center = spec.offset_hz[arg];
    for (int pass = 0; pass < 4; ++pass) {  // recenter so the window is symmetric
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < spec.offset_hz.size(); ++k) {
            if (std::abs(spec.offset_hz[k] - center) > 2.0 * halfwidth_hz) continue;
            num += spec.offset_hz[k] * spec.density[k];
            den += spec.density[k];
        }
        center = num / den;
    }
    return center;
}

}  // namespace

TEST_CASE("collision rate from pressure") {
    CHECK(collision_rate_from_pressure(7.0, 7.0) == doctest::Approx(4.9e7).epsilon(1e-12));
    CHECK(collision_rate_from_pressure(3.0, 0.0) == 0.0);
    CHECK(collision_rate_from_pressure(7.0, 0.2) == doctest::Approx(1.4e6).epsilon(1e-12));
    CHECK_THROWS_AS(collision_rate_from_pressure(-1.0, 1.0), invalid_parameter);
    CHECK_THROWS_AS(collision_rate_from_pressure(1.0, -1.0), invalid_parameter);
}

TEST_CASE("parameter validation") {
    CollisionParams p = natural_params(0.0, 0.0);
    p.drive = 4.0;  // > 0.1 * |detuning|
    CHECK_THROWS_AS(p.validate(), invalid_parameter);
    p = natural_params(0.0, 0.0);
    p.gamma = 0.0;
    CHECK_THROWS_AS(p.validate(), invalid_parameter);
    p = natural_params(-1.0, 0.0);
    CHECK_THROWS_AS(p.validate(), invalid_parameter);
}

TEST_CASE("unstable dt is rejected with the bound in the message") {
    const CollisionParams p = natural_params(0.0, 0.0);
    TrajectoryConfig cfg = natural_cfg(10, 1);
    cfg.dt = 0.01;  // bound is 0.1/30
    try {
        cfg.validate(p);
        FAIL("expected stability_error");
    } catch (const stability_error& e) {
        CHECK(std::string(e.what()).find("0.003") != std::string::npos);
    }
    TrajectoryConfig short_cfg = natural_cfg(10, 1);
    short_cfg.duration = 10.0;  // < 50/gamma
    CHECK_THROWS_AS(short_cfg.validate(p), invalid_parameter);
}

TEST_CASE("noise-free steady state matches the closed form") {
    const CollisionParams p = natural_params(0.0, 0.0);
    const TrajectorySet set = simulate_dipole(p, natural_cfg(12, 5));
    const double expected = (p.drive / 2.0) * (p.drive / 2.0) /
                            (p.detuning * p.detuning + p.gamma * p.gamma / 4.0);
    for (const auto& series : set.series)
        for (const auto& c : series) CHECK(std::norm(c) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("same seed reproduces the series bitwise") {
    const CollisionParams p = natural_params(2.0, 1.0);
    const TrajectorySet a = simulate_dipole(p, natural_cfg(10, 17));
    const TrajectorySet b = simulate_dipole(p, natural_cfg(10, 17));
    for (size_t t = 0; t < a.series.size(); ++t)
        for (size_t i = 0; i < a.series[t].size(); ++i) CHECK(a.series[t][i] == b.series[t][i]);
}

TEST_CASE("step halving: trajectory variance agrees within 5 percent") {
    const CollisionParams p = natural_params(0.0, 2.0);
    const auto variance_of = [&](double dt) {
        const TrajectorySet set = simulate_dipole(p, natural_cfg(150, 23, dt));
        double mean_sq = 0.0;
        std::complex<double> mean(0.0, 0.0);
        long n = 0;
        for (const auto& series : set.series)
            for (const auto& c : series) {
                mean_sq += std::norm(c);
                mean += c;
                ++n;
            }
        mean_sq /= n;
        mean /= static_cast<double>(n);
        return mean_sq - std::norm(mean);
    };
    const double v1 = variance_of(2e-3);
    const double v2 = variance_of(1e-3);
    CHECK(std::abs(v1 - v2) < 0.05 * v2);
}

TEST_CASE("unperturbed emitter is a pure coherent line") {
    const CollisionParams p = natural_params(0.0, 0.0);
    const TrajectorySet set = simulate_dipole(p, natural_cfg(12, 3));
    const EmissionSpectrum spec = emission_spectrum(set);

    double total = 0.0, near_zero = 0.0;
    for (size_t k = 0; k < spec.offset_hz.size(); ++k) {
        total += spec.density[k];
        if (std::abs(spec.offset_hz[k]) <= 3.0 * spec.bin_hz) near_zero += spec.density[k];
    }
    CHECK(near_zero / total >= 0.99);
    CHECK(coherent_fraction(spec, 1.5) >= 0.99);
}

TEST_CASE("spectrum is normalized to unit power") {
    const CollisionParams p = natural_params(1.0, 0.5);
    const EmissionSpectrum spec = emission_spectrum(simulate_dipole(p, natural_cfg(15, 6)));
    double total = 0.0;
    for (double d : spec.density) total += d;
    CHECK(std::abs(total * spec.bin_hz - 1.0) < 1e-6);
}

TEST_CASE("strong collisions center the incoherent component on the atomic line") {
    for (double gamma_c : {5.0, 10.0}) {
        const CollisionParams p = natural_params(gamma_c, 0.0);
        const EmissionSpectrum spec = emission_spectrum(simulate_dipole(p, natural_cfg(200, 8)));
        const double halfwidth = (p.gamma / 2.0 + p.gamma_c / 2.0) / kTwoPi;
        const double center = incoherent_centroid(spec, 1.5, halfwidth);
        const double expected = -p.detuning / kTwoPi;
        CHECK(std::abs(center - expected) <= 2.0 * spec.bin_hz);
    }
}

TEST_CASE("intermediate collisions: bimodal split equals the detuning") {
    const CollisionParams p = natural_params(1.0, 0.0);
    const EmissionSpectrum spec = emission_spectrum(simulate_dipole(p, natural_cfg(200, 9)));
    // coherent component pinned at zero offset
    size_t arg0 = 0;
    for (size_t k = 0; k < spec.offset_hz.size(); ++k)
        if (spec.density[k] > spec.density[arg0]) arg0 = k;
    CHECK(std::abs(spec.offset_hz[arg0]) <= spec.bin_hz);
    const double halfwidth = (p.gamma / 2.0 + p.gamma_c / 2.0) / kTwoPi;
    const double center = incoherent_centroid(spec, 1.5, halfwidth);
    const double split = std::abs(spec.offset_hz[arg0] - center);
    CHECK(std::abs(split - p.detuning / kTwoPi) <= 2.0 * spec.bin_hz);
}

TEST_CASE("white-noise channel reproduces the gamma:Gamma weights") {
    const double noise = 1.5;
    const CollisionParams p = natural_params(0.0, noise);
    const TrajectorySet set = simulate_dipole(p, natural_cfg(300, 10));
    const FractionEstimate est = coherent_fraction_stats(set, 1.5);
    const double ratio = (1.0 - est.fraction) / est.fraction;
    CHECK(std::abs(ratio - noise / p.gamma) < 0.2 * (noise / p.gamma));
}

TEST_CASE("collision branching ratio and monotonicity") {
    // the 7-torr estimate in natural units: gamma_c/gamma = 49/36
    const double ratio_ref = 49.0 / 36.0;
    const CollisionParams p = natural_params(ratio_ref, 0.0);
    const TrajectorySet set = simulate_dipole(p, natural_cfg(300, 11));
    const FractionEstimate est = coherent_fraction_stats(set, 1.5);
    const double ratio = (1.0 - est.fraction) / est.fraction;
    CHECK(std::abs(ratio - ratio_ref) < 0.2 * ratio_ref);

    double prev = 2.0;
    for (double gamma_c : {0.0, 1.0, 3.0, 10.0}) {
        const CollisionParams pc = natural_params(gamma_c, 0.0);
        const EmissionSpectrum spec = emission_spectrum(simulate_dipole(pc, natural_cfg(150, 12)));
        const double f = coherent_fraction(spec, 1.5);
        CHECK(f < prev + 1e-9);
        prev = f;
    }
}

TEST_CASE("step halving leaves the coherent fraction within the Monte Carlo error") {
    const CollisionParams p = natural_params(49.0 / 36.0, 0.0);
    const TrajectorySet coarse = simulate_dipole(p, natural_cfg(200, 13, 2e-3));
    const TrajectorySet fine = simulate_dipole(p, natural_cfg(200, 14, 1e-3));
    const FractionEstimate a = coherent_fraction_stats(coarse, 1.5);
    const FractionEstimate b = coherent_fraction_stats(fine, 1.5);
    const double se = std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma);
    CHECK(std::abs(a.fraction - b.fraction) < se);
}

TEST_CASE("window validation") {
    const CollisionParams p = natural_params(1.0, 0.0);
    const EmissionSpectrum spec = emission_spectrum(simulate_dipole(p, natural_cfg(12, 15)));
    // incoherent center sits at 4.77 Hz; half of that bounds the window
    CHECK_THROWS_AS(coherent_fraction(spec, 3.0), invalid_parameter);
    CHECK_THROWS_AS(coherent_fraction(spec, 0.0), invalid_parameter);
}

TEST_CASE("too few trajectories for a spectrum") {
    const CollisionParams p = natural_params(1.0, 0.0);
    const TrajectorySet set = simulate_dipole(p, natural_cfg(5, 16));
    CHECK_THROWS_AS(emission_spectrum(set), statistics_error);
}

TEST_CASE("partial dephasing spread weakens the collision damage") {
    // E[e^{i theta}] = sinc(spread/2) > 0 leaves part of the coherence intact
    CollisionParams partial = natural_params(3.0, 0.0);
    partial.collision_phase_spread = 1.0;
    const CollisionParams full = natural_params(3.0, 0.0);
    const double f_partial =
        coherent_fraction(emission_spectrum(simulate_dipole(partial, natural_cfg(100, 18))), 1.5);
    const double f_full =
        coherent_fraction(emission_spectrum(simulate_dipole(full, natural_cfg(100, 18))), 1.5);
    CHECK(f_partial > f_full);
}
