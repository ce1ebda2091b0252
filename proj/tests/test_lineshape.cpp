#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stokes/lineshape.hpp"
#include "stokes/rng.hpp"

using namespace stokes;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}  // namespace

TEST_CASE("voigt pure-Gaussian limit at the peak") {
    // 2 sqrt(ln2/pi) / fwhm
    const double expected = 2.0 * std::sqrt(kLn2 / kPi) / 0.48;
    CHECK(rel_err(voigt_density(0.0, {0.48, 0.0}), expected) < 1e-12);
    CHECK(expected == doctest::Approx(1.957).epsilon(1e-3));
}

TEST_CASE("voigt pure-Lorentzian limit at the peak") {
    const double expected = 2.0 / (kPi * 0.48);
    CHECK(rel_err(voigt_density(0.0, {0.0, 0.48}), expected) < 1e-12);
    CHECK(expected == doctest::Approx(1.326).epsilon(1e-3));
}

TEST_CASE("voigt equal-width peak value pinned by the quadrature oracle") {
    // frozen from oracles::voigt_quadrature(0, 0.48, 0.48)
    const double frozen = 0.9356477901082848;
    CHECK(rel_err(oracles::voigt_quadrature(0.0, 0.48, 0.48), frozen) < 1e-9);
    CHECK(rel_err(voigt_density(0.0, {0.48, 0.48}), frozen) < 1e-8);
}

TEST_CASE("voigt rejects the all-zero profile") {
    CHECK_THROWS_AS((voigt_density(0.0, {0.0, 0.0})), invalid_parameter);
}

TEST_CASE("voigt symmetry") {
    SplitMix64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const double g = 0.05 + 1.95 * rng.next_unit();
        const double l = 0.05 + 1.95 * rng.next_unit();
        const double x = 6.0 * (rng.next_unit() - 0.5) * (g + l);
        const double a = voigt_density(x, {g, l});
        const double b = voigt_density(-x, {g, l});
        CHECK(rel_err(a, b) < 1e-12);
    }
}

TEST_CASE("voigt limit consistency against the pure profiles") {
    SplitMix64 rng(12);
    for (int i = 0; i < 50; ++i) {
        const double w = 0.1 + 2.0 * rng.next_unit();
        const double x = 5.0 * (rng.next_unit() - 0.5) * w;
        CHECK(rel_err(voigt_density(x, {w, 0.0}), gaussian_density(x, w)) < 1e-6);
        CHECK(rel_err(voigt_density(x, {0.0, w}), lorentzian_density(x, w)) < 1e-6);
    }
}

TEST_CASE("voigt matches the quadrature oracle over random widths and offsets") {
    SplitMix64 rng(13);
    for (int pair = 0; pair < 20; ++pair) {
        const double g = 0.05 + 1.95 * rng.next_unit();
        const double l = 0.05 + 1.95 * rng.next_unit();
        const double fwhm_estimate = 0.5346 * l + std::sqrt(0.2166 * l * l + g * g);
        for (int k = 0; k < 100; ++k) {
            const double x = 10.0 * (rng.next_unit() - 0.5) * fwhm_estimate;
            const double want = oracles::voigt_quadrature(x, g, l);
            CHECK(rel_err(voigt_density(x, {g, l}), want) < 1e-6);
        }
    }
}

TEST_CASE("voigt unit area") {
    for (auto [g, l] : {std::pair{0.48, 0.48}, {0.3, 1.1}, {1.5, 0.07}}) {
        const auto f = [&](double x) { return voigt_density(x, {g, l}); };
        double area = 0.0;
        const double cuts[] = {-2e4, -300.0, -30.0, -5.0, 5.0, 30.0, 300.0, 2e4};
        for (size_t i = 0; i + 1 < std::size(cuts); ++i)
            area += oracles::integrate(f, cuts[i], cuts[i + 1], 1e-9);
        CHECK(std::abs(area - 1.0) < 1e-4);
    }
}

TEST_CASE("airy transmission anchors") {
    const EtalonConfig etalon{5.0, 0.48};
    CHECK(airy_transmission(0.0, etalon) == 1.0);
    CHECK(airy_transmission(0.48 / 2.0, etalon) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(airy_transmission(-0.48 / 2.0, etalon) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(airy_transmission(5.0, etalon) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("airy periodicity") {
    const EtalonConfig etalon{5.0, 0.48};
    SplitMix64 rng(14);
    for (int i = 0; i < 300; ++i) {
        const double x = 20.0 * (rng.next_unit() - 0.5);
        CHECK(std::abs(airy_transmission(x, etalon) - airy_transmission(x + etalon.fsr, etalon)) <
              1e-12);
    }
}

TEST_CASE("finesse from the two definitions agrees within 1%") {
    const EtalonConfig etalon{5.0, 0.48};
    CHECK(etalon.finesse() == doctest::Approx(10.4167).epsilon(1e-3));
    CHECK(rel_err(etalon.airy_finesse(), etalon.finesse()) < 0.01);
}

TEST_CASE("etalon invariants") {
    CHECK_THROWS_AS((EtalonConfig{5.0, 5.5}.validate()), invalid_parameter);
    CHECK_THROWS_AS((EtalonConfig{5.0, 0.0}.validate()), invalid_parameter);
    CHECK_THROWS_AS((airy_transmission(0.0, EtalonConfig{-1.0, 0.48})), invalid_parameter);
}

TEST_CASE("convolution: delta recovers the kernel in place") {
    const FrequencyGrid grid{-1.0, 0.01, 201};
    std::vector<double> kernel(grid.count);
    for (int i = 0; i < grid.count; ++i) kernel[i] = gaussian_density(grid.at(i) - grid.center(), 0.2);
    std::vector<double> values(grid.count, 0.0);
    values[100] = 1.0 / grid.step;  // unit-area discrete delta at the grid center
    const auto out = convolve_on_grid(grid, values, kernel);
    for (int i = 0; i < grid.count; ++i) CHECK(out[i] == doctest::Approx(kernel[i]).epsilon(1e-12));
}

TEST_CASE("convolution: zero input stays zero") {
    const FrequencyGrid grid{-1.0, 0.01, 201};
    std::vector<double> kernel(grid.count);
    for (int i = 0; i < grid.count; ++i) kernel[i] = gaussian_density(grid.at(i) - grid.center(), 0.2);
    const auto out = convolve_on_grid(grid, std::vector<double>(grid.count, 0.0), kernel);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("convolution: Gaussian x Gaussian closed form") {
    const FrequencyGrid grid{-3.0, 0.005, 1201};
    const double a = 0.3, b = 0.3;
    std::vector<double> values(grid.count), kernel(grid.count);
    for (int i = 0; i < grid.count; ++i) {
        values[i] = gaussian_density(grid.at(i), a);
        kernel[i] = gaussian_density(grid.at(i) - grid.center(), b);
    }
    const auto out = convolve_on_grid(grid, values, kernel);
    const double combined = std::sqrt(a * a + b * b);
    const double peak = gaussian_density(0.0, combined);
    for (int i = 0; i < grid.count; ++i) {
        const double want = gaussian_density(grid.at(i), combined);
        CHECK(std::abs(out[i] - want) < 0.01 * peak);
    }
}

TEST_CASE("convolution preserves area and nonnegativity") {
    const FrequencyGrid grid{-3.0, 0.01, 601};
    SplitMix64 rng(15);
    std::vector<double> values(grid.count, 0.0);
    for (int i = 120; i < 480; ++i) values[i] = rng.next_unit();
    std::vector<double> kernel(grid.count);
    for (int i = 0; i < grid.count; ++i)
        kernel[i] = gaussian_density(grid.at(i) - grid.center(), 0.1);
    double kernel_area = 0.0;
    for (double k : kernel) kernel_area += k * grid.step;
    REQUIRE(std::abs(kernel_area - 1.0) < 1e-3);

    const auto out = convolve_on_grid(grid, values, kernel);
    double area_in = 0.0, area_out = 0.0;
    for (int i = 0; i < grid.count; ++i) {
        area_in += values[i] * grid.step;
        area_out += out[i] * grid.step;
        CHECK(out[i] >= 0.0);
    }
    CHECK(std::abs(area_out - area_in) < 2e-3 * area_in);
}

TEST_CASE("convolution rejects mismatched grids and bad kernels") {
    const FrequencyGrid grid{-1.0, 0.01, 101};
    std::vector<double> ok(grid.count, 0.0);
    std::vector<double> kernel(grid.count, 0.0);
    kernel[50] = 1.0 / grid.step;
    CHECK_THROWS_AS(convolve_on_grid(grid, std::vector<double>(7, 0.0), kernel), dimension_error);
    std::vector<double> off_area(grid.count, 0.0);
    off_area[50] = 1.5 / grid.step;
    CHECK_THROWS_AS(convolve_on_grid(grid, ok, off_area), invalid_parameter);
}

TEST_CASE("faddeeva spot values") {
    // w(0) = 1, w(i) = e * erfc(1)
    CHECK(rel_err(faddeeva_w({0.0, 0.0}).real(), 1.0) < 1e-12);
    CHECK(rel_err(faddeeva_w({0.0, 1.0}).real(), std::exp(1.0) * std::erfc(1.0)) < 1e-12);
    // Re w(x, 0) = exp(-x^2)
    for (double x : {0.3, 1.0, 2.5}) {
        CHECK(rel_err(faddeeva_w({x, 0.0}).real(), std::exp(-x * x)) < 1e-10);
    }
}

TEST_CASE("doppler width helper is a cross-check, not an override") {
    // Rb D1 at 60 C: close to, but not exactly, the configured 480 MHz
    const double fwhm = doppler_fwhm_ghz(333.15, 86.909, 377.107);
    CHECK(fwhm == doctest::Approx(0.529).epsilon(0.01));
    CHECK(fwhm != doctest::Approx(0.48).epsilon(0.01));
}

TEST_CASE("frequency grid invariants") {
    CHECK_THROWS_AS((FrequencyGrid{0.0, -0.1, 10}.validate()), invalid_parameter);
    CHECK_THROWS_AS((FrequencyGrid{0.0, 0.1, 1}.validate()), invalid_parameter);
    const FrequencyGrid g{-2.5, 0.01, 500};
    g.validate();
    CHECK(g.at(0) == -2.5);
    CHECK(g.at(499) == doctest::Approx(2.49).epsilon(1e-12));
}
