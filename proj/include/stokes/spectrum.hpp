#pragma once

#include <string>
#include <vector>

#include "stokes/lineshape.hpp"

namespace stokes {

enum class LineKind { coherent_stokes, fluorescence_upper, fluorescence_lower, laser_leakage };

std::string to_string(LineKind kind);

// One spectral line of the Stokes channel. Centers are in GHz relative to the
// coherent Stokes line at 0; amplitude is the mean photon number per pulse the
// line delivers when the analysis etalon sits exactly on it.
struct LineComponent {
    LineKind kind = LineKind::coherent_stokes;
    double center = 0.0;
    double amplitude = 0.0;
    ProfileParams profile;
};

// How the analysis Fabry-Perot enters the model: the exact periodic Airy
// function (scan synthesis) or the single-Lorentzian approximation of the same
// FWHM (fit model).
enum class EtalonResponse { airy, lorentzian };

struct ChannelModel {
    std::vector<LineComponent> components;
    double background = 0.0;  // mean counts per pulse, dark + stray
    double write_detuning = 0.8;
    double hyperfine_ground_split = 6.834;
    double excited_split = 0.812;
    EtalonConfig etalon;

    void validate() const;
    const LineComponent* find(LineKind kind) const;
    LineComponent* find(LineKind kind);
};

// Reference Stokes channel: coherent line at 0, fluorescence doublet red of
// it by the write detuning (upper level) and additionally by the excited-state
// splitting (lower level, amplitude 0 by default), write-laser leakage one
// ground-state splitting blue.
ChannelModel default_channel_model(double write_detuning);

// Shift nu by the multiple of the FSR that lands it in
// [window_center - fsr/2, window_center + fsr/2).
double fold_into_window(double nu, const EtalonConfig& etalon, double window_center = 0.0);

// Mean counts per pulse vs. etalon frequency, split into the coherent part and
// everything else (fluorescence + leakage + background).
struct MeanTrace {
    std::vector<double> frequency;
    std::vector<double> total;
    std::vector<double> coherent;
    std::vector<double> noise;
};

MeanTrace predict_mean_counts(const ChannelModel& model, const FrequencyGrid& grid,
                              EtalonResponse response = EtalonResponse::airy);

// Same model evaluated at arbitrary (strictly increasing) frequencies; used by
// the fit engine, which must follow the data's axis.
MeanTrace predict_mean_counts_at(const ChannelModel& model, const std::vector<double>& frequency,
                                 EtalonResponse response);

// Signal-to-noise ratio chi1 per grid point: coherent / (incoherent + leakage
// + background). +infinity where the denominator vanishes.
std::vector<double> snr_profile(const ChannelModel& model, const FrequencyGrid& grid,
                                EtalonResponse response = EtalonResponse::airy);
std::vector<double> snr_profile(const MeanTrace& trace);

}  // namespace stokes
