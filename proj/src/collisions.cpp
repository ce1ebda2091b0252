#include "stokes/collisions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stokes/rng.hpp"

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;

// In-place iterative radix-2 FFT, n a power of two.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

size_t floor_pow2(size_t n) {
    size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

// Per-trajectory window/total power split of the periodogram.
struct TrajectoryPower {
    double window = 0.0;
    double total = 0.0;
};

TrajectoryPower window_power(const std::vector<std::complex<double>>& series, size_t nfft,
                             double sample_dt, double window_hz) {
    std::vector<std::complex<double>> buf(series.begin(), series.begin() + nfft);
    fft_pow2(buf);
    TrajectoryPower p;
    const double df = 1.0 / (static_cast<double>(nfft) * sample_dt);
    for (size_t k = 0; k < nfft; ++k) {
        const double power = std::norm(buf[k]);
        p.total += power;
        const double f = (k <= nfft / 2) ? static_cast<double>(k) * df
                                         : (static_cast<double>(k) - static_cast<double>(nfft)) * df;
        if (std::abs(f) <= window_hz) p.window += power;
    }
    return p;
}

}  // namespace

void CollisionParams::validate() const {
    if (!(gamma > 0.0)) throw invalid_parameter("CollisionParams: gamma must be > 0");
    if (gamma_c < 0.0) throw invalid_parameter("CollisionParams: gamma_c must be >= 0");
    if (noise_amplitude < 0.0)
        throw invalid_parameter("CollisionParams: noise_amplitude must be >= 0");
    if (!(drive > 0.0)) throw invalid_parameter("CollisionParams: drive must be > 0");
    if (drive > 0.1 * std::abs(detuning))
        throw invalid_parameter("CollisionParams: weak-drive model requires drive <= 0.1 |detuning|");
    if (collision_phase_spread <= 0.0 || collision_phase_spread > 2.0 * kPi)
        throw invalid_parameter("CollisionParams: phase spread must be in (0, 2 pi]");
}

void TrajectoryConfig::validate(const CollisionParams& params) const {
    if (n_trajectories < 1) throw invalid_parameter("TrajectoryConfig: n_trajectories must be >= 1");
    if (record_every < 1) throw invalid_parameter("TrajectoryConfig: record_every must be >= 1");
    if (!(dt > 0.0) || !(duration > 0.0))
        throw invalid_parameter("TrajectoryConfig: duration and dt must be > 0");
    const double fastest = std::max({params.gamma, params.gamma_c, std::abs(params.detuning)});
    const double bound = 0.1 / fastest;
    if (!(dt < bound)) {
        std::ostringstream msg;
        msg << "TrajectoryConfig: dt = " << dt << " violates the stability bound dt < 0.1/max(gamma"
            << ", gamma_c, |detuning|) = " << bound;
        throw stability_error(msg.str());
    }
    if (duration < 50.0 / params.gamma)
        throw invalid_parameter(
            "TrajectoryConfig: duration must be >= 50/gamma to resolve the radiative width");
}

double collision_rate_from_pressure(double coeff_mhz_per_torr, double pressure_torr) {
    if (coeff_mhz_per_torr < 0.0 || pressure_torr < 0.0)
        throw invalid_parameter("collision_rate_from_pressure: inputs must be >= 0");
    return coeff_mhz_per_torr * pressure_torr * 1e6;
}

TrajectorySet simulate_dipole(const CollisionParams& params, const TrajectoryConfig& cfg) {
    params.validate();
    cfg.validate(params);

    const double dt = cfg.dt;
    const long n_steps = std::lround(cfg.duration / dt);
    const double burn = cfg.burn_in >= 0.0 ? cfg.burn_in : 10.0 / params.gamma;
    const long burn_steps = std::lround(burn / dt);
    const long n_samples = n_steps / cfg.record_every;
    if (n_samples < 16) throw invalid_parameter("simulate_dipole: too few recorded samples");

    // exact propagator of dc/dt = (i detuning - gamma/2) c - i drive/2
    const std::complex<double> zeta(-0.5 * params.gamma, params.detuning);
    const std::complex<double> propagator = std::exp(zeta * dt);
    const std::complex<double> c_ss = std::complex<double>(0.0, -0.5 * params.drive) / (-zeta);

    const bool has_noise = params.noise_amplitude > 0.0;
    const bool has_collisions = params.gamma_c > 0.0;
    const double noise_scale = std::sqrt(params.noise_amplitude * dt);
    const double p_collision = has_collisions ? -std::expm1(-0.5 * params.gamma_c * dt) : 0.0;
    const double spread = params.collision_phase_spread;

    TrajectorySet set;
    set.sample_dt = dt * cfg.record_every;
    set.params = params;
    set.series.resize(cfg.n_trajectories);

    for (int t = 0; t < cfg.n_trajectories; ++t) {
        SplitMix64 rng(substream_seed(cfg.seed, static_cast<uint64_t>(t)));
        auto& out = set.series[t];
        out.reserve(n_samples);
        std::complex<double> c = c_ss;
        for (long step = -burn_steps; step < n_steps; ++step) {
            c = c_ss + (c - c_ss) * propagator;
            if (has_noise) {
                const double dphi = noise_scale * sample_normal(rng);
                c *= std::complex<double>(std::cos(dphi), std::sin(dphi));
            }
            if (has_collisions && rng.next_unit() <= p_collision) {
                const double theta = spread * (rng.next_unit() - 0.5);
                c *= std::complex<double>(std::cos(theta), std::sin(theta));
            }
            if (step >= 0 && (step + 1) % cfg.record_every == 0) {
                out.push_back(c);
                if (static_cast<long>(out.size()) == n_samples) break;
            }
        }
    }
    return set;
}

EmissionSpectrum emission_spectrum(const TrajectorySet& set) {
    if (set.series.size() < 10)
        throw statistics_error("emission_spectrum: needs at least 10 trajectories");
    const size_t nfft = floor_pow2(set.series.front().size());
    if (nfft < 16) throw statistics_error("emission_spectrum: series too short");

    std::vector<double> power(nfft, 0.0);
    std::vector<std::complex<double>> buf(nfft);
    for (const auto& series : set.series) {
        if (series.size() < nfft)
            throw dimension_error("emission_spectrum: trajectories have unequal lengths");
        std::copy(series.begin(), series.begin() + nfft, buf.begin());
        fft_pow2(buf);
        for (size_t k = 0; k < nfft; ++k) power[k] += std::norm(buf[k]);
    }

    EmissionSpectrum spec;
    spec.bin_hz = 1.0 / (static_cast<double>(nfft) * set.sample_dt);
    spec.detuning = set.params.detuning;
    spec.offset_hz.resize(nfft);
    spec.density.resize(nfft);

    double total = 0.0;
    for (double p : power) total += p;
    if (!(total > 0.0)) throw statistics_error("emission_spectrum: zero total power");

    // DFT bin k holds the component of c(t) at cyclic frequency f_k; the
    // emitted field goes as c(t) exp(-i w_laser t), so the offset from the
    // laser is -f_k. Reorder so the offset axis is ascending.
    std::vector<std::pair<double, double>> pts(nfft);
    for (size_t k = 0; k < nfft; ++k) {
        const double f = (k <= nfft / 2)
                             ? static_cast<double>(k) * spec.bin_hz
                             : (static_cast<double>(k) - static_cast<double>(nfft)) * spec.bin_hz;
        pts[k] = {-f, power[k] / (total * spec.bin_hz)};
    }
    std::sort(pts.begin(), pts.end());
    for (size_t k = 0; k < nfft; ++k) {
        spec.offset_hz[k] = pts[k].first;
        spec.density[k] = pts[k].second;
    }
    return spec;
}

double coherent_fraction(const EmissionSpectrum& spectrum, double window_hz) {
    const double incoherent_center = std::abs(spectrum.detuning) / (2.0 * kPi);
    if (!(window_hz > 0.0) || !(window_hz < 0.5 * incoherent_center))
        throw invalid_parameter(
            "coherent_fraction: window must be positive and below half the incoherent offset");
    if (window_hz < 2.0 * spectrum.bin_hz)
        throw invalid_parameter("coherent_fraction: window does not resolve the coherent line");
    double acc = 0.0;
    for (size_t k = 0; k < spectrum.offset_hz.size(); ++k)
        if (std::abs(spectrum.offset_hz[k]) <= window_hz) acc += spectrum.density[k];
    return acc * spectrum.bin_hz;
}

FractionEstimate coherent_fraction_stats(const TrajectorySet& set, double window_hz,
                                         int n_blocks) {
    const int n_traj = static_cast<int>(set.series.size());
    if (n_blocks < 2 || n_traj < 2 * n_blocks)
        throw invalid_parameter("coherent_fraction_stats: needs >= 2 trajectories per block");
    const double incoherent_center = std::abs(set.params.detuning) / (2.0 * kPi);
    if (!(window_hz > 0.0) || !(window_hz < 0.5 * incoherent_center))
        throw invalid_parameter(
            "coherent_fraction_stats: window must be positive and below half the incoherent offset");

    const size_t nfft = floor_pow2(set.series.front().size());
    std::vector<double> fractions;
    fractions.reserve(n_blocks);
    double window_sum = 0.0, total_sum = 0.0;
    int traj_in_block = 0, block = 0;
    const int per_block = n_traj / n_blocks;
    double grand_window = 0.0, grand_total = 0.0;
    for (int t = 0; t < n_traj; ++t) {
        const auto p = window_power(set.series[t], nfft, set.sample_dt, window_hz);
        window_sum += p.window;
        total_sum += p.total;
        grand_window += p.window;
        grand_total += p.total;
        if (++traj_in_block == per_block && block + 1 < n_blocks) {
            fractions.push_back(window_sum / total_sum);
            window_sum = total_sum = 0.0;
            traj_in_block = 0;
            ++block;
        }
    }
    fractions.push_back(window_sum / total_sum);

    FractionEstimate est;
    est.fraction = grand_window / grand_total;
    double mean = 0.0;
    for (double f : fractions) mean += f;
    mean /= fractions.size();
    double var = 0.0;
    for (double f : fractions) var += (f - mean) * (f - mean);
    var /= (fractions.size() - 1);
    est.sigma = std::sqrt(var / fractions.size());
    return est;
}

}  // namespace stokes
