#include "stokes/lineshape.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;
const double kInvSqrtPi = 1.0 / std::sqrt(kPi);

// Rational series of Weideman, SIAM J. Numer. Anal. 31 (1994). The Fourier
// coefficients are computed once by direct DFT of f(theta) on 4N points.
constexpr int kWeidemanN = 64;

struct WeidemanTable {
    double L = 0.0;
    std::array<double, kWeidemanN> a{};

    WeidemanTable() {
        const int m2 = 4 * kWeidemanN;
        L = std::sqrt(kWeidemanN / std::sqrt(2.0));
        std::array<double, 4 * kWeidemanN> f{};
        std::array<double, 4 * kWeidemanN> theta{};
        for (int m = 1; m < m2; ++m) {  // f(-pi) = 0
            theta[m] = -kPi + 2.0 * kPi * m / m2;
            const double t = L * std::tan(0.5 * theta[m]);
            f[m] = std::exp(-t * t) * (L * L + t * t);
        }
        for (int n = 1; n <= kWeidemanN; ++n) {
            double s = 0.0;
            for (int m = 1; m < m2; ++m) s += f[m] * std::cos(n * theta[m]);
            a[n - 1] = s / m2;
        }
    }
};

}  // namespace

void FrequencyGrid::validate() const {
    if (!(step > 0.0)) throw invalid_parameter("FrequencyGrid: step must be > 0");
    if (count < 2) throw invalid_parameter("FrequencyGrid: count must be >= 2");
}

std::vector<double> FrequencyGrid::frequencies() const {
    validate();
    std::vector<double> nu(count);
    for (int k = 0; k < count; ++k) nu[k] = at(k);
    return nu;
}

void ProfileParams::validate() const {
    if (gaussian_fwhm < 0.0 || lorentzian_fwhm < 0.0)
        throw invalid_parameter("ProfileParams: widths must be >= 0");
    if (is_delta())
        throw invalid_parameter("ProfileParams: at least one width must be > 0");
}

void EtalonConfig::validate() const {
    if (!(fwhm > 0.0) || !(fwhm < fsr))
        throw invalid_parameter("EtalonConfig: requires 0 < fwhm < fsr");
}

double EtalonConfig::airy_finesse() const {
    validate();
    const double s = std::sin(kPi * fwhm / (2.0 * fsr));
    return kPi / (2.0 * s);  // pi*sqrt(F)/2 with F = 1/s^2
}

double gaussian_density(double delta_nu, double fwhm) {
    if (!(fwhm > 0.0)) throw invalid_parameter("gaussian_density: fwhm must be > 0");
    const double u = delta_nu / fwhm;
    return 2.0 * std::sqrt(kLn2 / kPi) / fwhm * std::exp(-4.0 * kLn2 * u * u);
}

double lorentzian_density(double delta_nu, double fwhm) {
    if (!(fwhm > 0.0)) throw invalid_parameter("lorentzian_density: fwhm must be > 0");
    const double u = 2.0 * delta_nu / fwhm;
    return 2.0 / (kPi * fwhm) / (1.0 + u * u);
}

std::complex<double> faddeeva_w(std::complex<double> z) {
    static const WeidemanTable table;
    if (z.imag() < 0.0) {
        // w(-z) = 2 exp(-z^2) - w(z); only safe while exp(-z^2) does not overflow.
        return 2.0 * std::exp(-z * z) - faddeeva_w(-z);
    }
    const std::complex<double> iz(-z.imag(), z.real());
    const std::complex<double> denom = table.L - iz;
    const std::complex<double> big_z = (table.L + iz) / denom;
    std::complex<double> p = 0.0;
    for (int n = kWeidemanN - 1; n >= 0; --n) p = p * big_z + table.a[n];
    return 2.0 * p / (denom * denom) + kInvSqrtPi / denom;
}

double voigt_density(double delta_nu, const ProfileParams& params) {
    params.validate();
    if (params.lorentzian_fwhm == 0.0) return gaussian_density(delta_nu, params.gaussian_fwhm);
    if (params.gaussian_fwhm == 0.0) return lorentzian_density(delta_nu, params.lorentzian_fwhm);
    const double sigma = params.gaussian_fwhm / (2.0 * std::sqrt(2.0 * kLn2));
    const double scale = sigma * std::sqrt(2.0);
    const std::complex<double> z(delta_nu / scale, 0.5 * params.lorentzian_fwhm / scale);
    return faddeeva_w(z).real() / (scale * std::sqrt(kPi));
}

double airy_transmission(double delta_nu, const EtalonConfig& etalon) {
    etalon.validate();
    const double sh = std::sin(kPi * etalon.fwhm / (2.0 * etalon.fsr));
    const double coeff = 1.0 / (sh * sh);  // Airy coefficient F
    const double s = std::sin(kPi * delta_nu / etalon.fsr);
    return 1.0 / (1.0 + coeff * s * s);
}

double lorentzian_transmission(double delta_nu, double fwhm) {
    if (!(fwhm > 0.0)) throw invalid_parameter("lorentzian_transmission: fwhm must be > 0");
    const double u = 2.0 * delta_nu / fwhm;
    return 1.0 / (1.0 + u * u);
}

std::vector<double> convolve_on_grid(const FrequencyGrid& grid,
                                     const std::vector<double>& values,
                                     const std::vector<double>& kernel) {
    grid.validate();
    if (static_cast<int>(values.size()) != grid.count)
        throw dimension_error("convolve_on_grid: values do not match grid");
    if (kernel.empty()) throw dimension_error("convolve_on_grid: empty kernel");

    double area = 0.0;
    for (double k : kernel) area += k;
    area *= grid.step;
    if (std::abs(area - 1.0) > 1e-3)
        throw invalid_parameter("convolve_on_grid: kernel area deviates from 1 by more than 1e-3");

    const int n = grid.count;
    const int nk = static_cast<int>(kernel.size());
    const int kc = nk / 2;
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const int jlo = std::max(0, i + kc - nk + 1);
        const int jhi = std::min(n - 1, i + kc);
        for (int j = jlo; j <= jhi; ++j) acc += values[j] * kernel[i - j + kc];
        out[i] = acc * grid.step;
    }
    return out;
}

double doppler_fwhm_ghz(double temperature_k, double mass_amu, double line_freq_thz) {
    if (!(temperature_k > 0.0) || !(mass_amu > 0.0) || !(line_freq_thz > 0.0))
        throw invalid_parameter("doppler_fwhm_ghz: inputs must be > 0");
    constexpr double kB = 1.380649e-23;
    constexpr double amu = 1.66053906660e-27;
    constexpr double c = 2.99792458e8;
    const double m = mass_amu * amu;
    return line_freq_thz * 1e3 * std::sqrt(8.0 * kLn2 * kB * temperature_k / (m * c * c));
}

}  // namespace stokes
