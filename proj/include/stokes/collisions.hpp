#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "stokes/errors.hpp"

namespace stokes {

// Driven, damped two-level emitter in the frame of the drive laser, weak-drive
// regime. Two independent dephasing channels act on the excited amplitude:
//
//  * continuous white-noise detuning of strength noise_amplitude (Gamma),
//    <xi(t) xi(t')> = Gamma delta(t - t'), adding Gamma/2 to the coherence
//    decay and producing coherent:incoherent spectral weights gamma:Gamma;
//  * delta-function collisions that fully randomize the amplitude phase,
//    applied at Poisson rate gamma_c/2 so that the channel adds gamma_c/2 to
//    the coherence decay, mirroring the white-noise channel. The weights are
//    then gamma:gamma_c, the branching ratio of radiative decay with and
//    without an intermediate collision.
struct CollisionParams {
    double gamma = 3.6e7;          // radiative (population) decay rate, 1/s
    double gamma_c = 0.0;          // collisional dephasing rate, 1/s
    double noise_amplitude = 0.0;  // white-noise dephasing rate Gamma, 1/s
    double detuning = 0.0;         // laser minus atomic resonance, rad/s
    double drive = 0.0;            // drive amplitude, rad/s; weak drive needs drive <= 0.1 |detuning|
    double collision_phase_spread = 6.283185307179586;  // kick angle uniform in +-spread/2

    void validate() const;
};

struct TrajectoryConfig {
    double duration = 0.0;  // recorded time span, s
    double dt = 0.0;        // integrator step, s
    int n_trajectories = 0;
    uint64_t seed = 0;
    int record_every = 1;   // store every k-th step; sample spacing is dt * record_every
    double burn_in = -1.0;  // settling time before recording; < 0 means 10/gamma

    void validate(const CollisionParams& params) const;
};

double collision_rate_from_pressure(double coeff_mhz_per_torr, double pressure_torr);

struct TrajectorySet {
    double sample_dt = 0.0;
    CollisionParams params;
    std::vector<std::vector<std::complex<double>>> series;  // [trajectory][sample]
};

// Integrates the excited-state amplitude: exact affine propagator for the
// deterministic part, multiplicative phase increments for the noise, Bernoulli
// collision tests per step. Deterministic given (params, cfg, seed).
TrajectorySet simulate_dipole(const CollisionParams& params, const TrajectoryConfig& cfg);

// Trajectory-averaged periodogram of the emitted field, normalized to unit
// total power. The axis is the frequency offset from the drive laser in Hz
// (cyclic); the elastic line sits at 0, the collision-broadened component at
// -detuning/2pi.
struct EmissionSpectrum {
    std::vector<double> offset_hz;
    std::vector<double> density;  // per Hz; sum(density) * bin_hz == 1
    double bin_hz = 0.0;
    double detuning = 0.0;  // rad/s, copied from the generating params
};

EmissionSpectrum emission_spectrum(const TrajectorySet& set);

// Fraction of total power within +-window_hz of offset 0.
double coherent_fraction(const EmissionSpectrum& spectrum, double window_hz);

// Same fraction with a Monte Carlo standard error from trajectory blocks.
struct FractionEstimate {
    double fraction = 0.0;
    double sigma = 0.0;
};

FractionEstimate coherent_fraction_stats(const TrajectorySet& set, double window_hz,
                                         int n_blocks = 10);

}  // namespace stokes
