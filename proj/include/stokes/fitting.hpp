#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stokes/spectrum.hpp"

namespace stokes {

struct FitParameter {
    std::string name;
    double value = 0.0;
    bool log_scale = false;  // positivity bound via log reparameterization
};

struct FitData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;
    bool unit_weights = false;  // set when the source carried no uncertainties

    void validate() const;
};

enum class FitModelKind { intensity_scan, g2_scan };

// Fit of the composite channel model (or the g2 degradation curve) to a scan.
// Free parameters are named; everything else is pinned by base_model:
//   intensity_scan: coherent_amplitude, fluorescence_amplitude,
//     fluorescence_lower_amplitude, leakage_amplitude, background,
//     fluorescence_center, coherent_center, gaussian_fwhm
//   g2_scan: correlation_amplitude (chi1 comes from base_model)
struct FitProblem {
    FitModelKind kind = FitModelKind::intensity_scan;
    FitData data;
    std::vector<FitParameter> free_parameters;
    ChannelModel base_model;
    EtalonResponse response = EtalonResponse::lorentzian;

    void validate() const;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;
    std::vector<std::vector<double>> covariance;
    double chi_square = 0.0;
    double reduced_chi_square = 0.0;
    std::vector<double> residuals;  // y - model at the optimum
    bool converged = false;
    int iterations = 0;
    std::string message;
    ChannelModel fitted_model;  // base_model with the fitted values applied

    bool has(const std::string& name) const;
    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
    double covariance_of(const std::string& a, const std::string& b) const;
};

// Generic damped (Levenberg-Marquardt) weighted least squares on a callback
// model. fit() wraps it with the named channel/g2 models.
struct LsqProblem {
    std::function<std::vector<double>(const std::vector<double>&)> model;
    FitData data;
    std::vector<FitParameter> parameters;
};

FitResult least_squares(const LsqProblem& problem);

FitResult fit(const FitProblem& problem);

// Central-difference Jacobian d model / d parameter (linear parameter space),
// rows indexed by data point.
std::vector<std::vector<double>> jacobian(const FitProblem& problem,
                                          const std::vector<double>& at);

struct Separation {
    double value = 0.0;
    double sigma = 0.0;
};

// |coherent center - fluorescence_upper center| with propagated uncertainty.
Separation peak_separation(const FitResult& result);

}  // namespace stokes
