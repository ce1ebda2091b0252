#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracles {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa, double b, double fb,
                double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol_abs) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(a, fa, b, fb, fm);
    return adaptive(f, a, fa, b, fb, m, fm, whole, tol_abs, 60);
}

double voigt_quadrature(double delta_nu, double gaussian_fwhm, double lorentzian_fwhm) {
    if (!(gaussian_fwhm > 0.0) || !(lorentzian_fwhm > 0.0))
        throw std::invalid_argument("voigt_quadrature: both widths must be > 0");
    const double sigma = gaussian_fwhm / (2.0 * std::sqrt(2.0 * kLn2));
    const double gauss_norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
    const double hwhm = 0.5 * lorentzian_fwhm;
    const double lor_norm = hwhm / kPi;

    const auto integrand = [&](double t) {
        const double u = t / sigma;
        const double d = delta_nu - t;
        return gauss_norm * std::exp(-0.5 * u * u) * lor_norm / (d * d + hwhm * hwhm);
    };

    // Domain covers the Gaussian support; breakpoints bracket the Lorentzian
    // spike at t = delta_nu when it falls inside.
    const double lo = -9.5 * sigma, hi = 9.5 * sigma;
    std::vector<double> cuts = {lo, hi};
    for (double k : {-40.0, -10.0, -2.0, -0.5, 0.0, 0.5, 2.0, 10.0, 40.0}) {
        const double c = delta_nu + k * hwhm;
        if (c > lo && c < hi) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());

    // two passes: rough value sets the absolute tolerance for the refinement
    double rough = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        rough += integrate(integrand, cuts[i], cuts[i + 1], 1e-6);
    const double tol = std::max(std::abs(rough), 1e-30) * 1e-11;

    double total = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate(integrand, cuts[i], cuts[i + 1], tol);
    return total;
}

JointOracle g2_enumeration(const stokes::JointCountModel& model) {
    const double nbar = model.nbar_pair;
    const double ratio = nbar / (1.0 + nbar);

    // truncation levels chosen so every discarded tail is below 1e-12
    int m_max = 4;
    if (nbar > 0.0) m_max = std::max(4, static_cast<int>(std::ceil(std::log(1e-14) / std::log(ratio))));
    const int x_max = 40;

    // channel pmf given m pairs: binomial thinning convolved with Poisson noise
    const auto channel_pmf = [&](int m, double eta, double noise) {
        std::vector<double> bin(m + 1, 0.0);
        for (int k = 0; k <= m; ++k) {
            double c = 1.0;
            for (int i = 0; i < k; ++i) c *= static_cast<double>(m - i) / (k - i);
            bin[k] = c * std::pow(eta, k) * std::pow(1.0 - eta, m - k);
        }
        std::vector<double> pois(x_max + 1, 0.0);
        pois[0] = std::exp(-noise);
        for (int j = 1; j <= x_max; ++j) pois[j] = pois[j - 1] * noise / j;
        std::vector<double> pmf(x_max + 1, 0.0);
        for (int k = 0; k <= std::min(m, x_max); ++k)
            for (int j = 0; k + j <= x_max; ++j) pmf[k + j] += bin[k] * pois[j];
        if (model.saturating) {
            double tail = 1.0 - pmf[0];
            std::fill(pmf.begin() + 1, pmf.end(), 0.0);
            pmf[1] = tail;
        }
        return pmf;
    };

    JointOracle oracle;
    double pm = 1.0 / (1.0 + nbar);
    for (int m = 0; m <= m_max; ++m) {
        const auto pmf1 = channel_pmf(m, model.eta_stokes, model.noise_stokes);
        const auto pmf2 = channel_pmf(m, model.eta_antistokes, model.noise_antistokes);
        double m1 = 0.0, m2 = 0.0;
        for (int x = 0; x <= x_max; ++x) {
            m1 += x * pmf1[x];
            m2 += x * pmf2[x];
        }
        oracle.mean_stokes += pm * m1;
        oracle.mean_antistokes += pm * m2;
        for (int x = 0; x <= x_max; ++x)
            for (int y = 0; y <= x_max; ++y)
                oracle.mean_product += pm * pmf1[x] * pmf2[y] * x * y;
        pm *= ratio;
    }
    oracle.g2 = oracle.mean_product / (oracle.mean_stokes * oracle.mean_antistokes);
    return oracle;
}

}  // namespace oracles
