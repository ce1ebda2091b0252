#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stokes/counting.hpp"
#include "stokes/fitting.hpp"

namespace stokes {

// Full synthetic-experiment configuration. The per-point count models derive
// from the channel model: the pair number equals the coherent amplitude, the
// Stokes efficiency follows the etalon transmission of the coherent line, and
// the fixed Anti-Stokes channel (eta, noise) is solved from the correlation
// amplitude A and the configured total Anti-Stokes mean, which keeps A
// constant across the scan.
struct ScanConfig {
    FrequencyGrid grid{-2.5, 0.01, 500};
    long n_cycles_per_point = 4000;
    double repetition_rate_hz = 1e4;  // metadata only
    double antistokes_mean = 0.8;
    double correlation_amplitude = 0.35;
    ChannelModel channel;
    EtalonResponse synth_response = EtalonResponse::airy;
    uint64_t seed = 1;

    void validate() const;
};

struct ScanPoint {
    double frequency = 0.0;
    double mean_counts = 0.0;
    double g2 = 0.0;
    double g2_sigma = 0.0;
};

struct ScanTrace {
    std::vector<ScanPoint> points;
    std::string provenance;
    long n_cycles = 0;  // cycles per point; 0 when unknown (ingested data)

    void validate() const;
};

ScanTrace run_synthetic_scan(const ScanConfig& cfg);

// Per-point generative count models implied by the configuration (the link
// between the spectral model and the counting layer).
std::vector<JointCountModel> point_count_models(const ScanConfig& cfg);

// Same tying for an arbitrary (e.g. fitted) decomposition: pair number from
// the coherent amplitude, per-point Stokes efficiency and noise from the
// trace, Anti-Stokes channel solved from (correlation_amplitude,
// antistokes_mean).
std::vector<JointCountModel> tie_count_models(const MeanTrace& trace, double nbar_pair,
                                              double correlation_amplitude,
                                              double antistokes_mean);

// Model-based 1-sigma band of the g2 estimator per scan point.
std::vector<double> g2_confidence_band(const ScanConfig& cfg);

struct AnalyzeOptions {
    ChannelModel initial_model;  // starting point and structural template
    EtalonResponse fit_response = EtalonResponse::lorentzian;
    bool float_gaussian_width = false;
    bool float_coherent_center = false;
    long n_cycles = 4000;  // used for weights when the trace does not know its own
    double initial_a = 0.2;
    double antistokes_mean = 0.8;  // for the model-based g2 weights
};

struct AnalysisReport {
    FitResult intensity_fit;
    FitResult g2_fit;
    double correlation_amplitude = 0.0;
    double correlation_amplitude_sigma = 0.0;
    Separation separation;
};

// Intensity fit (two weighting passes: Poisson-like first, then variances
// from the fitted generative decomposition), chi1 from the fitted model, and
// the one-parameter g2 fit.
AnalysisReport analyze_scan(const ScanTrace& trace, const AnalyzeOptions& options);

// Low-buffer-gas preset: fluorescence scaled with the collision rate,
// Anti-Stokes signal-to-noise scaled with pressure, mean of four seeded scans.
ScanTrace low_pressure_scenario(const ScanConfig& cfg, double pressure_torr,
                                double broadening_coeff_mhz_per_torr, double gamma);

// Tab-delimited trace table with '#' provenance header.
void write_trace(std::ostream& out, const ScanTrace& trace,
                 const std::vector<std::string>& header_comments);
ScanTrace read_trace(std::istream& in);

}  // namespace stokes
