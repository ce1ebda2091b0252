#pragma once

#include <complex>
#include <vector>

#include "stokes/errors.hpp"

namespace stokes {

// Uniform frequency axis in GHz: points are start + k*step, k = 0..count-1.
struct FrequencyGrid {
    double start = 0.0;
    double step = 0.0;
    int count = 0;

    void validate() const;
    double at(int k) const { return start + k * step; }
    double span() const { return step * (count - 1); }
    double center() const { return start + 0.5 * span(); }
    std::vector<double> frequencies() const;
};

// Voigt widths (FWHM, GHz). Either part may be zero, not both.
struct ProfileParams {
    double gaussian_fwhm = 0.0;
    double lorentzian_fwhm = 0.0;

    bool is_delta() const { return gaussian_fwhm == 0.0 && lorentzian_fwhm == 0.0; }
    void validate() const;
};

// Scanning Fabry-Perot filter: free spectral range and linewidth, GHz.
struct EtalonConfig {
    double fsr = 5.0;
    double fwhm = 0.48;

    void validate() const;
    double finesse() const { return fsr / fwhm; }
    // Finesse recovered from the Airy coefficient, pi*sqrt(F)/2. Agrees with
    // fsr/fwhm to ~(fwhm/fsr)^2; both are reported for consistency checks.
    double airy_finesse() const;
};

// Unit-area profiles vs. offset from line center, 1/GHz.
double gaussian_density(double delta_nu, double fwhm);
double lorentzian_density(double delta_nu, double fwhm);
double voigt_density(double delta_nu, const ProfileParams& params);

// Faddeeva function w(z) = exp(-z^2) erfc(-iz), Im(z) >= 0.
// Weideman rational series; relative accuracy ~1e-12 in the upper half plane.
std::complex<double> faddeeva_w(std::complex<double> z);

// Peak-normalized etalon transmissions (1 on resonance).
double airy_transmission(double delta_nu, const EtalonConfig& etalon);
double lorentzian_transmission(double delta_nu, double fwhm);

// Discrete convolution of grid-sampled values with a unit-area kernel sampled
// on a grid of the same step. kernel[k] is the kernel value at offset
// (k - kernel.size()/2) * step. Boundaries are zero-padded.
std::vector<double> convolve_on_grid(const FrequencyGrid& grid,
                                     const std::vector<double>& values,
                                     const std::vector<double>& kernel);

// Doppler FWHM of an optical line, GHz. Provided for cross-checks only; the
// configured Gaussian width is never overridden by this value.
double doppler_fwhm_ghz(double temperature_k, double mass_amu, double line_freq_thz);

}  // namespace stokes
