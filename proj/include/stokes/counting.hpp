#pragma once

#include <cstdint>
#include <vector>

#include "stokes/spectrum.hpp"

namespace stokes {

// Generative model for one scan point: a thermal number of correlated pairs
// per pulse, binomially thinned into each channel, plus independent Poisson
// noise. This realizes g2 - 1 = (g2_sas - 1) (1 + 1/chi1)^-1 (1 + 1/chi2)^-1
// exactly, with g2_sas = 2 + 1/nbar_pair and chi = eta*nbar/noise per channel.
struct JointCountModel {
    double nbar_pair = 0.0;
    double eta_stokes = 1.0;
    double eta_antistokes = 1.0;
    double noise_stokes = 0.0;
    double noise_antistokes = 0.0;
    bool saturating = false;  // gated detectors clip at one count per pulse

    void validate() const;
    double mean_stokes() const { return eta_stokes * nbar_pair + noise_stokes; }
    double mean_antistokes() const { return eta_antistokes * nbar_pair + noise_antistokes; }
};

struct PulseOutcome {
    int n_stokes = 0;
    int n_antistokes = 0;
};

struct G2Estimate {
    double value = 0.0;
    double sigma = 0.0;
    long n_cycles = 0;
};

std::vector<PulseOutcome> sample_joint_counts(const JointCountModel& model, long n_cycles,
                                              uint64_t seed);

// Plug-in estimator <n1 n2>/(<n1><n2>) with a first-order (delta method)
// standard error from the sample moments.
G2Estimate estimate_g2(const std::vector<PulseOutcome>& outcomes);

// Same estimator, uncertainty from resampling cycles with replacement.
G2Estimate estimate_g2_bootstrap(const std::vector<PulseOutcome>& outcomes, int n_resamples,
                                 uint64_t seed);

// g2 - 1 = (g2_signal - 1) (1 + 1/chi1)^-1 (1 + 1/chi2)^-1. Accepts chi = 0
// and chi = +infinity.
double degrade_g2(double g2_signal, double chi1, double chi2);

// g2(nu) = 1 + A (1 + 1/chi1(nu))^-1 over the scan grid.
std::vector<double> predict_g2_trace(const MeanTrace& trace, double amplitude_a);
std::vector<double> predict_g2_trace(const ChannelModel& model, const FrequencyGrid& grid,
                                     EtalonResponse response, double amplitude_a);

// Exact population moments of the generative model (pair-number enumeration,
// truncated far below 1e-10 relative).
struct G2Population {
    double g2 = 0.0;
    double var_one_cycle = 0.0;  // delta-method variance of the estimator for one cycle
    double mean_stokes = 0.0;
    double mean_antistokes = 0.0;
    double var_stokes = 0.0;
    double var_antistokes = 0.0;
    bool defined = false;

    double sigma(long n_cycles) const;
};

G2Population population_g2(const JointCountModel& model);

// Per-point 1-sigma standard error of the g2 estimator under the generative
// model with n_cycles pulses. NaN marks points where g2 is undefined (a
// channel mean of zero).
std::vector<double> confidence_band(const std::vector<JointCountModel>& point_models,
                                    long n_cycles);

}  // namespace stokes
