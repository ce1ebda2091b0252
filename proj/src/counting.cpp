#include "stokes/counting.hpp"

#include <cmath>
#include <limits>

#include "stokes/rng.hpp"

namespace stokes {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Conditional per-channel moments given m pairs: X = Binomial(m, eta) + Poisson(noise),
// clipped to {0,1} for saturating detectors.
struct ChannelMoments {
    double mean;
    double second;
};

ChannelMoments channel_moments(int m, double eta, double noise, bool saturating) {
    if (saturating) {
        const double p = 1.0 - std::pow(1.0 - eta, m) * std::exp(-noise);
        return {p, p};
    }
    const double mu = eta * m + noise;
    const double var = m * eta * (1.0 - eta) + noise;
    return {mu, var + mu * mu};
}

struct JointMoments {
    double e1 = 0.0, e2 = 0.0, e12 = 0.0;
    double e11 = 0.0, e22 = 0.0;           // E[n1^2], E[n2^2]
    double e112 = 0.0, e122 = 0.0;         // E[n1^2 n2], E[n1 n2^2]
    double e1212 = 0.0;                    // E[(n1 n2)^2]
};

JointMoments joint_moments(const JointCountModel& model) {
    JointMoments mom;
    const double nbar = model.nbar_pair;
    const double ratio = nbar / (1.0 + nbar);
    double pm = 1.0 / (1.0 + nbar);  // P(m = 0)
    for (int m = 0; m < 100000; ++m) {
        const auto c1 = channel_moments(m, model.eta_stokes, model.noise_stokes, model.saturating);
        const auto c2 =
            channel_moments(m, model.eta_antistokes, model.noise_antistokes, model.saturating);
        mom.e1 += pm * c1.mean;
        mom.e2 += pm * c2.mean;
        mom.e12 += pm * c1.mean * c2.mean;
        mom.e11 += pm * c1.second;
        mom.e22 += pm * c2.second;
        mom.e112 += pm * c1.second * c2.mean;
        mom.e122 += pm * c1.mean * c2.second;
        mom.e1212 += pm * c1.second * c2.second;
        if (pm * (c1.second + 1.0) * (c2.second + 1.0) < 1e-16 && m > 4) break;
        pm *= ratio;
        if (pm == 0.0) break;
    }
    return mom;
}

double delta_method_variance(double e1, double e2, double e12, double var12, double cov12_1,
                             double cov12_2, double var1, double var2, double cov1_2) {
    // gradient of g = M12/(M1 M2) at the population moments
    const double g = e12 / (e1 * e2);
    const double d12 = 1.0 / (e1 * e2);
    const double d1 = -g / e1;
    const double d2 = -g / e2;
    return d12 * d12 * var12 + d1 * d1 * var1 + d2 * d2 * var2 + 2.0 * d12 * d1 * cov12_1 +
           2.0 * d12 * d2 * cov12_2 + 2.0 * d1 * d2 * cov1_2;
}

}  // namespace

void JointCountModel::validate() const {
    if (nbar_pair < 0.0) throw invalid_parameter("JointCountModel: nbar_pair must be >= 0");
    if (eta_stokes < 0.0 || eta_stokes > 1.0 || eta_antistokes < 0.0 || eta_antistokes > 1.0)
        throw invalid_parameter("JointCountModel: efficiencies must be in [0,1]");
    if (noise_stokes < 0.0 || noise_antistokes < 0.0)
        throw invalid_parameter("JointCountModel: noise means must be >= 0");
}

std::vector<PulseOutcome> sample_joint_counts(const JointCountModel& model, long n_cycles,
                                              uint64_t seed) {
    model.validate();
    if (n_cycles < 1) throw invalid_parameter("sample_joint_counts: n_cycles must be >= 1");
    std::vector<PulseOutcome> out(n_cycles);
    for (long i = 0; i < n_cycles; ++i) {
        SplitMix64 rng(substream_seed(seed, static_cast<uint64_t>(i)));
        const int m = sample_thermal(rng, model.nbar_pair);
        int n1 = sample_binomial(rng, m, model.eta_stokes) + sample_poisson(rng, model.noise_stokes);
        int n2 = sample_binomial(rng, m, model.eta_antistokes) +
                 sample_poisson(rng, model.noise_antistokes);
        if (model.saturating) {
            n1 = n1 > 0 ? 1 : 0;
            n2 = n2 > 0 ? 1 : 0;
        }
        out[i] = {n1, n2};
    }
    return out;
}

G2Estimate estimate_g2(const std::vector<PulseOutcome>& outcomes) {
    const long n = static_cast<long>(outcomes.size());
    if (n < 2) throw statistics_error("estimate_g2: needs at least two cycles");
    double s1 = 0, s2 = 0, s12 = 0;
    double q11 = 0, q22 = 0, q1212 = 0, q112 = 0, q122 = 0;
    for (const auto& o : outcomes) {
        const double a = o.n_stokes, b = o.n_antistokes, ab = a * b;
        s1 += a;
        s2 += b;
        s12 += ab;
        q11 += a * a;
        q22 += b * b;
        q1212 += ab * ab;
        q112 += ab * a;
        q122 += ab * b;
    }
    const double inv = 1.0 / n;
    const double e1 = s1 * inv, e2 = s2 * inv, e12 = s12 * inv;
    if (!(e1 > 0.0) || !(e2 > 0.0))
        throw statistics_error("estimate_g2: undefined, a channel mean is zero");

    const double var12 = q1212 * inv - e12 * e12;
    const double var1 = q11 * inv - e1 * e1;
    const double var2 = q22 * inv - e2 * e2;
    const double cov12_1 = q112 * inv - e12 * e1;
    const double cov12_2 = q122 * inv - e12 * e2;
    const double cov1_2 = e12 - e1 * e2;

    G2Estimate est;
    est.n_cycles = n;
    est.value = e12 / (e1 * e2);
    // second-order (ratio-estimator) bias of the plug-in value, removed to
    // keep many-point fits unbiased at finite cycle counts
    const double bias = (est.value * (var1 / (e1 * e1) + var2 / (e2 * e2) + cov1_2 / (e1 * e2)) -
                         cov12_1 / (e1 * e1 * e2) - cov12_2 / (e1 * e2 * e2)) /
                        n;
    if (std::abs(bias) < 0.25 * est.value) est.value -= bias;
    const double v =
        delta_method_variance(e1, e2, e12, var12, cov12_1, cov12_2, var1, var2, cov1_2) / n;
    est.sigma = std::sqrt(std::max(v, 0.0));
    return est;
}

G2Estimate estimate_g2_bootstrap(const std::vector<PulseOutcome>& outcomes, int n_resamples,
                                 uint64_t seed) {
    const long n = static_cast<long>(outcomes.size());
    if (n < 2) throw statistics_error("estimate_g2_bootstrap: needs at least two cycles");
    if (n_resamples < 2) throw invalid_parameter("estimate_g2_bootstrap: needs >= 2 resamples");

    G2Estimate est = estimate_g2(outcomes);
    std::vector<double> values;
    values.reserve(n_resamples);
    for (int b = 0; b < n_resamples; ++b) {
        SplitMix64 rng(substream_seed(seed, static_cast<uint64_t>(b)));
        double s1 = 0, s2 = 0, s12 = 0;
        for (long i = 0; i < n; ++i) {
            const auto& o = outcomes[rng.next_below(static_cast<uint64_t>(n))];
            s1 += o.n_stokes;
            s2 += o.n_antistokes;
            s12 += static_cast<double>(o.n_stokes) * o.n_antistokes;
        }
        if (s1 > 0 && s2 > 0) values.push_back(s12 * n / (s1 * s2));
    }
    if (values.size() < 2) throw statistics_error("estimate_g2_bootstrap: degenerate resamples");
    double mean = 0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (values.size() - 1);
    est.sigma = std::sqrt(var);
    return est;
}

double degrade_g2(double g2_signal, double chi1, double chi2) {
    if (g2_signal < 0.0 || std::isnan(g2_signal))
        throw invalid_parameter("degrade_g2: g2_signal must be >= 0");
    if (chi1 < 0.0 || chi2 < 0.0 || std::isnan(chi1) || std::isnan(chi2))
        throw invalid_parameter("degrade_g2: chi must be >= 0");
    const auto factor = [](double chi) {
        if (std::isinf(chi)) return 1.0;
        if (chi == 0.0) return 0.0;
        return 1.0 / (1.0 + 1.0 / chi);
    };
    // grouping the chi factors keeps the swap symmetry bitwise exact
    return 1.0 + (g2_signal - 1.0) * (factor(chi1) * factor(chi2));
}

std::vector<double> predict_g2_trace(const MeanTrace& trace, double amplitude_a) {
    if (amplitude_a < 0.0) throw invalid_parameter("predict_g2_trace: amplitude must be >= 0");
    const std::vector<double> chi = snr_profile(trace);
    std::vector<double> g2(chi.size());
    for (size_t i = 0; i < chi.size(); ++i)
        g2[i] = degrade_g2(1.0 + amplitude_a, chi[i], std::numeric_limits<double>::infinity());
    return g2;
}

std::vector<double> predict_g2_trace(const ChannelModel& model, const FrequencyGrid& grid,
                                     EtalonResponse response, double amplitude_a) {
    return predict_g2_trace(predict_mean_counts(model, grid, response), amplitude_a);
}

double G2Population::sigma(long n_cycles) const {
    if (!defined || n_cycles < 1) return kNaN;
    return std::sqrt(var_one_cycle / n_cycles);
}

G2Population population_g2(const JointCountModel& model) {
    model.validate();
    G2Population pop;
    const JointMoments m = joint_moments(model);
    pop.mean_stokes = m.e1;
    pop.mean_antistokes = m.e2;
    pop.var_stokes = m.e11 - m.e1 * m.e1;
    pop.var_antistokes = m.e22 - m.e2 * m.e2;
    if (!(m.e1 > 0.0) || !(m.e2 > 0.0)) {
        pop.g2 = kNaN;
        pop.var_one_cycle = kNaN;
        pop.defined = false;
        return pop;
    }
    pop.defined = true;
    pop.g2 = m.e12 / (m.e1 * m.e2);
    pop.var_one_cycle = delta_method_variance(
        m.e1, m.e2, m.e12, m.e1212 - m.e12 * m.e12, m.e112 - m.e12 * m.e1,
        m.e122 - m.e12 * m.e2, pop.var_stokes, pop.var_antistokes, m.e12 - m.e1 * m.e2);
    return pop;
}

std::vector<double> confidence_band(const std::vector<JointCountModel>& point_models,
                                    long n_cycles) {
    if (n_cycles < 100) throw invalid_parameter("confidence_band: needs n_cycles >= 100");
    std::vector<double> band(point_models.size());
    for (size_t i = 0; i < point_models.size(); ++i)
        band[i] = population_g2(point_models[i]).sigma(n_cycles);
    return band;
}

}  // namespace stokes
