#include "stokes/spectrum.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

// Fourier transform of the unit-area Voigt profile at cyclic frequency f
// (conjugate variable of the GHz offset axis).
double voigt_ft(const ProfileParams& p, double f) {
    const double g = kPi * p.gaussian_fwhm * f;
    return std::exp(-g * g / (4.0 * kLn2) - kPi * p.lorentzian_fwhm * std::abs(f));
}

// Component shape observed through the periodic Airy filter. Both the wrapped
// line profile and the peak-normalized Airy function have closed-form Fourier
// series on the FSR period; their convolution is summed directly:
//
//   s(nu) = t0 * (1 + 2 sum_k V(k/P) rho^k cos(2 pi k (nu - c) / P))
//
// with rho the Poisson-kernel ratio of the Airy function. The series is
// truncated once rho^k V(k/P) drops below 1e-14.
struct AirySeries {
    double t0 = 0.0;
    std::vector<double> coeff;  // 2 * t0 * rho^k * V(k/P), k = 1..K
    double period = 0.0;

    AirySeries(const ProfileParams& profile, const EtalonConfig& etalon) {
        period = etalon.fsr;
        const double sh = std::sin(kPi * etalon.fwhm / (2.0 * etalon.fsr));
        const double coeff_f = 1.0 / (sh * sh);
        const double b = 1.0 + 2.0 / coeff_f;
        const double root = std::sqrt(b * b - 1.0);
        const double rho = b - root;
        t0 = (2.0 / coeff_f) / root;
        double rk = 1.0;
        for (int k = 1; k < 4096; ++k) {
            rk *= rho;
            const double vk = profile.is_delta() ? 1.0 : voigt_ft(profile, k / period);
            const double c = 2.0 * t0 * rk * vk;
            coeff.push_back(c);
            if (rk * vk < 1e-14) break;
        }
    }

    double eval(double delta_nu) const {
        // cos(k theta) by Chebyshev recurrence
        const double theta = 2.0 * kPi * delta_nu / period;
        const double c1 = std::cos(theta);
        double ckm1 = 1.0, ck = c1;
        double acc = t0;
        for (double a : coeff) {
            acc += a * ck;
            const double next = 2.0 * c1 * ck - ckm1;
            ckm1 = ck;
            ck = next;
        }
        return acc;
    }
};

// Lorentzian fit mode: Voigt with the FP width added to the Lorentzian part,
// scaled so that a delta line reproduces the peak-normalized FP transmission.
double lorentzian_mode_shape(const ProfileParams& profile, const EtalonConfig& etalon,
                             double delta_nu) {
    ProfileParams combined{profile.gaussian_fwhm, profile.lorentzian_fwhm + etalon.fwhm};
    return 0.5 * kPi * etalon.fwhm * voigt_density(delta_nu, combined);
}

}  // namespace

std::string to_string(LineKind kind) {
    switch (kind) {
        case LineKind::coherent_stokes: return "coherent_stokes";
        case LineKind::fluorescence_upper: return "fluorescence_upper";
        case LineKind::fluorescence_lower: return "fluorescence_lower";
        case LineKind::laser_leakage: return "laser_leakage";
    }
    return "?";
}

void ChannelModel::validate() const {
    etalon.validate();
    if (background < 0.0) throw invalid_parameter("ChannelModel: background must be >= 0");
    for (const auto& c : components) {
        if (c.amplitude < 0.0)
            throw invalid_parameter("ChannelModel: amplitude must be >= 0 (" + to_string(c.kind) + ")");
        if (c.profile.gaussian_fwhm < 0.0 || c.profile.lorentzian_fwhm < 0.0)
            throw invalid_parameter("ChannelModel: profile widths must be >= 0");
        if (c.kind == LineKind::coherent_stokes && c.profile.gaussian_fwhm != 0.0)
            throw invalid_parameter("ChannelModel: coherent line carries no Doppler width");
        if ((c.kind == LineKind::fluorescence_upper || c.kind == LineKind::fluorescence_lower) &&
            !(c.profile.gaussian_fwhm > 0.0))
            throw invalid_parameter("ChannelModel: fluorescence requires a Gaussian width");
    }
    const LineComponent* up = find(LineKind::fluorescence_upper);
    const LineComponent* lo = find(LineKind::fluorescence_lower);
    if (up && lo && std::abs((up->center - lo->center) - excited_split) > 1e-9)
        throw invalid_parameter("ChannelModel: fluorescence doublet must be split by excited_split");
    const LineComponent* leak = find(LineKind::laser_leakage);
    if (leak && std::abs(leak->center - hyperfine_ground_split) > 1e-9)
        throw invalid_parameter("ChannelModel: leakage sits at +hyperfine_ground_split");
}

const LineComponent* ChannelModel::find(LineKind kind) const {
    for (const auto& c : components)
        if (c.kind == kind) return &c;
    return nullptr;
}

LineComponent* ChannelModel::find(LineKind kind) {
    for (auto& c : components)
        if (c.kind == kind) return &c;
    return nullptr;
}

ChannelModel default_channel_model(double write_detuning) {
    if (!(write_detuning > 0.0))
        throw invalid_parameter("default_channel_model: write detuning must be > 0");
    ChannelModel m;
    m.write_detuning = write_detuning;
    m.etalon = EtalonConfig{5.0, 0.48};
    m.background = 0.01;
    const ProfileParams doppler{0.48, 0.0};
    m.components = {
        {LineKind::coherent_stokes, 0.0, 0.5, ProfileParams{0.0, 0.0}},
        {LineKind::fluorescence_upper, -write_detuning, 0.5, doppler},
        {LineKind::fluorescence_lower, -write_detuning - m.excited_split, 0.0, doppler},
        {LineKind::laser_leakage, m.hyperfine_ground_split, 0.3, ProfileParams{0.0, 0.0}},
    };
    return m;
}

double fold_into_window(double nu, const EtalonConfig& etalon, double window_center) {
    etalon.validate();
    const double rel = nu - window_center;
    return nu - etalon.fsr * std::floor(rel / etalon.fsr + 0.5);
}

MeanTrace predict_mean_counts_at(const ChannelModel& model, const std::vector<double>& frequency,
                                 EtalonResponse response) {
    model.validate();
    if (frequency.size() < 2)
        throw invalid_parameter("predict_mean_counts_at: needs at least two frequencies");
    const size_t n = frequency.size();
    const double window_center = 0.5 * (frequency.front() + frequency.back());

    MeanTrace trace;
    trace.frequency = frequency;
    trace.total.assign(n, model.background);
    trace.coherent.assign(n, 0.0);
    trace.noise.assign(n, model.background);

    for (const auto& comp : model.components) {
        if (comp.amplitude == 0.0) continue;
        std::vector<double> contrib(n);
        if (response == EtalonResponse::airy) {
            AirySeries series(comp.profile, model.etalon);
            for (size_t i = 0; i < n; ++i)
                contrib[i] = comp.amplitude * series.eval(frequency[i] - comp.center);
        } else {
            const double folded = fold_into_window(comp.center, model.etalon, window_center);
            for (size_t i = 0; i < n; ++i)
                contrib[i] = comp.amplitude *
                             lorentzian_mode_shape(comp.profile, model.etalon, frequency[i] - folded);
        }
        const bool is_coh = comp.kind == LineKind::coherent_stokes;
        for (size_t i = 0; i < n; ++i) {
            trace.total[i] += contrib[i];
            (is_coh ? trace.coherent[i] : trace.noise[i]) += contrib[i];
        }
    }
    return trace;
}

MeanTrace predict_mean_counts(const ChannelModel& model, const FrequencyGrid& grid,
                              EtalonResponse response) {
    grid.validate();
    if (grid.span() < model.etalon.fwhm)
        throw invalid_parameter("predict_mean_counts: grid narrower than one etalon FWHM");
    return predict_mean_counts_at(model, grid.frequencies(), response);
}

std::vector<double> snr_profile(const MeanTrace& trace) {
    std::vector<double> chi(trace.coherent.size());
    for (size_t i = 0; i < chi.size(); ++i) {
        if (trace.noise[i] > 0.0)
            chi[i] = trace.coherent[i] / trace.noise[i];
        else
            chi[i] = trace.coherent[i] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return chi;
}

std::vector<double> snr_profile(const ChannelModel& model, const FrequencyGrid& grid,
                                EtalonResponse response) {
    return snr_profile(predict_mean_counts(model, grid, response));
}

}  // namespace stokes
