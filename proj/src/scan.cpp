#include "stokes/scan.hpp"

#include "stokes/collisions.hpp"
#include "stokes/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "stokes/rng.hpp"

namespace stokes {

namespace {

// Fixed Anti-Stokes channel (eta2, noise2) with total mean `antistokes_mean`
// realizing A = (1 + 1/nbar)(1 + 1/chi2)^-1.
struct AntiStokesChannel {
    double eta = 0.0;
    double noise = 0.0;
};

AntiStokesChannel solve_antistokes(double nbar, double amplitude_a, double antistokes_mean) {
    if (nbar <= 0.0 || amplitude_a <= 0.0) return {0.0, antistokes_mean};
    const double g2sas_minus_1 = 1.0 + 1.0 / nbar;
    if (!(amplitude_a < g2sas_minus_1))
        throw invalid_parameter(
            "ScanConfig: correlation_amplitude must be below 1 + 1/coherent_amplitude");
    const double chi2 = amplitude_a / (g2sas_minus_1 - amplitude_a);
    AntiStokesChannel as;
    as.noise = antistokes_mean / (1.0 + chi2);
    as.eta = (antistokes_mean - as.noise) / nbar;
    if (as.eta > 1.0)
        throw invalid_parameter(
            "ScanConfig: antistokes_mean not realizable with efficiency <= 1; "
            "raise coherent_amplitude or lower correlation_amplitude");
    return as;
}

std::string format_value(double v) { return format_double(v); }

}  // namespace

void ScanConfig::validate() const {
    grid.validate();
    channel.validate();
    if (n_cycles_per_point < 100)
        throw invalid_parameter("ScanConfig: n_cycles_per_point must be >= 100");
    if (!(antistokes_mean > 0.0)) throw invalid_parameter("ScanConfig: antistokes_mean must be > 0");
    if (correlation_amplitude < 0.0)
        throw invalid_parameter("ScanConfig: correlation_amplitude must be >= 0");
    const LineComponent* coh = channel.find(LineKind::coherent_stokes);
    const double nbar = coh ? coh->amplitude : 0.0;
    solve_antistokes(nbar, correlation_amplitude, antistokes_mean);  // throws if unrealizable
}

void ScanTrace::validate() const {
    if (points.empty()) throw invalid_parameter("ScanTrace: empty trace");
    for (size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (i > 0 && !(p.frequency > points[i - 1].frequency))
            throw invalid_parameter("ScanTrace: frequencies must be strictly increasing");
        if (p.mean_counts < 0.0) throw invalid_parameter("ScanTrace: mean_counts must be >= 0");
        if (p.g2_sigma < 0.0) throw invalid_parameter("ScanTrace: g2_sigma must be >= 0");
    }
}

std::vector<JointCountModel> tie_count_models(const MeanTrace& trace, double nbar_pair,
                                              double correlation_amplitude,
                                              double antistokes_mean) {
    const AntiStokesChannel as =
        solve_antistokes(nbar_pair, correlation_amplitude, antistokes_mean);
    std::vector<JointCountModel> models(trace.frequency.size());
    for (size_t i = 0; i < models.size(); ++i) {
        JointCountModel m;
        m.nbar_pair = nbar_pair;
        m.eta_stokes = nbar_pair > 0.0 ? std::min(trace.coherent[i] / nbar_pair, 1.0) : 0.0;
        m.noise_stokes = std::max(trace.noise[i], 0.0);
        m.eta_antistokes = as.eta;
        m.noise_antistokes = as.noise;
        models[i] = m;
    }
    return models;
}

std::vector<JointCountModel> point_count_models(const ScanConfig& cfg) {
    cfg.validate();
    const MeanTrace trace = predict_mean_counts(cfg.channel, cfg.grid, cfg.synth_response);
    const LineComponent* coh = cfg.channel.find(LineKind::coherent_stokes);
    const double nbar = coh ? coh->amplitude : 0.0;
    return tie_count_models(trace, nbar, cfg.correlation_amplitude, cfg.antistokes_mean);
}

std::vector<double> g2_confidence_band(const ScanConfig& cfg) {
    return confidence_band(point_count_models(cfg), cfg.n_cycles_per_point);
}

ScanTrace run_synthetic_scan(const ScanConfig& cfg) {
    const std::vector<JointCountModel> models = point_count_models(cfg);

    ScanTrace trace;
    trace.n_cycles = cfg.n_cycles_per_point;
    trace.provenance = "synthetic seed=" + std::to_string(cfg.seed);
    trace.points.resize(models.size());

    for (size_t i = 0; i < models.size(); ++i) {
        const uint64_t point_seed = substream_seed(cfg.seed, static_cast<uint64_t>(i));
        const auto outcomes = sample_joint_counts(models[i], cfg.n_cycles_per_point, point_seed);
        double mean = 0.0;
        for (const auto& o : outcomes) mean += o.n_stokes;
        mean /= static_cast<double>(outcomes.size());

        ScanPoint& pt = trace.points[i];
        pt.frequency = cfg.grid.at(static_cast<int>(i));
        pt.mean_counts = mean;
        const G2Estimate est = estimate_g2(outcomes);  // zero-mean channels propagate as errors
        pt.g2 = est.value;
        pt.g2_sigma = est.sigma;
    }
    return trace;
}

AnalysisReport analyze_scan(const ScanTrace& trace, const AnalyzeOptions& options) {
    trace.validate();
    const long n_cycles = trace.n_cycles > 0 ? trace.n_cycles : options.n_cycles;
    if (n_cycles < 1) throw invalid_parameter("analyze_scan: cycle count must be positive");

    FitData intensity;
    for (const auto& p : trace.points) {
        intensity.x.push_back(p.frequency);
        intensity.y.push_back(p.mean_counts);
        intensity.sigma.push_back(
            std::sqrt(std::max(p.mean_counts, 1e-3) / static_cast<double>(n_cycles)));
    }

    FitProblem problem;
    problem.kind = FitModelKind::intensity_scan;
    problem.base_model = options.initial_model;
    problem.response = options.fit_response;
    problem.data = intensity;

    const ChannelModel& init = options.initial_model;
    auto add_if = [&](const char* name, const LineComponent* c, bool log_scale) {
        if (c && c->amplitude > 0.0) problem.free_parameters.push_back({name, c->amplitude, log_scale});
    };
    add_if("coherent_amplitude", init.find(LineKind::coherent_stokes), true);
    add_if("fluorescence_amplitude", init.find(LineKind::fluorescence_upper), true);
    add_if("fluorescence_lower_amplitude", init.find(LineKind::fluorescence_lower), true);
    add_if("leakage_amplitude", init.find(LineKind::laser_leakage), true);
    if (init.background > 0.0)
        problem.free_parameters.push_back({"background", init.background, true});
    if (const LineComponent* f = init.find(LineKind::fluorescence_upper))
        problem.free_parameters.push_back({"fluorescence_center", f->center, false});
    if (options.float_coherent_center)
        if (const LineComponent* c = init.find(LineKind::coherent_stokes))
            problem.free_parameters.push_back({"coherent_center", c->center, false});
    if (options.float_gaussian_width)
        if (const LineComponent* f = init.find(LineKind::fluorescence_upper))
            problem.free_parameters.push_back({"gaussian_fwhm", f->profile.gaussian_fwhm, true});

    // pass 1: Poisson-like weights
    FitResult pass1 = fit(problem);

    // pass 2: variances of the generative model read off the fitted decomposition
    const MeanTrace fitted =
        predict_mean_counts_at(pass1.fitted_model, intensity.x, options.fit_response);
    for (size_t i = 0; i < intensity.sigma.size(); ++i) {
        const double mu_c = std::max(fitted.coherent[i], 0.0);
        const double mu_n = std::max(fitted.noise[i], 0.0);
        const double var = mu_c * (1.0 + mu_c) + mu_n;
        intensity.sigma[i] = std::sqrt(std::max(var, 1e-6) / static_cast<double>(n_cycles));
    }
    problem.data = intensity;
    for (auto& p : problem.free_parameters) p.value = pass1.value(p.name);
    FitResult pass2 = fit(problem);

    // g2 fit against chi1 from the fitted intensity model
    FitProblem g2_problem;
    g2_problem.kind = FitModelKind::g2_scan;
    g2_problem.base_model = pass2.fitted_model;
    g2_problem.response = options.fit_response;
    for (const auto& p : trace.points) {
        if (!std::isfinite(p.g2) || !(p.g2_sigma > 0.0)) continue;
        g2_problem.data.x.push_back(p.frequency);
        g2_problem.data.y.push_back(p.g2);
        g2_problem.data.sigma.push_back(p.g2_sigma);
    }
    if (g2_problem.data.x.size() < 2)
        throw statistics_error("analyze_scan: too few usable g2 points");
    g2_problem.free_parameters.push_back({"correlation_amplitude", options.initial_a, false});
    FitResult g2_fit = fit(g2_problem);

    // second pass with model-based weights: the per-point estimated sigmas are
    // correlated with the estimates themselves, which drags a weighted fit
    // low; sigmas from the fitted generative model remove that coupling
    const LineComponent* coh_fit = pass2.fitted_model.find(LineKind::coherent_stokes);
    const double nbar_fit = coh_fit ? coh_fit->amplitude : 0.0;
    if (nbar_fit > 0.0 && n_cycles >= 100) {
        const double a_cap = 0.95 * (1.0 + 1.0 / nbar_fit);
        const double a1 =
            std::clamp(g2_fit.value("correlation_amplitude"), 0.0, a_cap);
        const MeanTrace fitted_g2x =
            predict_mean_counts_at(pass2.fitted_model, g2_problem.data.x, options.fit_response);
        const auto models = tie_count_models(fitted_g2x, nbar_fit, a1, options.antistokes_mean);
        const auto band = confidence_band(models, n_cycles);
        FitProblem reweighted = g2_problem;
        reweighted.data.x.clear();
        reweighted.data.y.clear();
        reweighted.data.sigma.clear();
        for (size_t i = 0; i < band.size(); ++i) {
            if (!std::isfinite(band[i]) || !(band[i] > 0.0)) continue;
            reweighted.data.x.push_back(g2_problem.data.x[i]);
            reweighted.data.y.push_back(g2_problem.data.y[i]);
            reweighted.data.sigma.push_back(band[i]);
        }
        if (reweighted.data.x.size() >= 2) {
            reweighted.free_parameters[0].value = a1;
            g2_fit = fit(reweighted);
        }
    }

    AnalysisReport report;
    report.intensity_fit = pass2;
    report.g2_fit = g2_fit;
    report.correlation_amplitude = report.g2_fit.value("correlation_amplitude");
    report.correlation_amplitude_sigma = report.g2_fit.sigma("correlation_amplitude");
    report.separation = peak_separation(pass2);
    return report;
}

ScanTrace low_pressure_scenario(const ScanConfig& cfg, double pressure_torr,
                                double broadening_coeff_mhz_per_torr, double gamma) {
    if (!(gamma > 0.0)) throw invalid_parameter("low_pressure_scenario: gamma must be > 0");
    const double gamma_c = collision_rate_from_pressure(broadening_coeff_mhz_per_torr, pressure_torr);
    constexpr double kReferencePressure = 7.0;

    ScanConfig scenario = cfg;
    const LineComponent* coh = scenario.channel.find(LineKind::coherent_stokes);
    const double coherent_amp = coh ? coh->amplitude : 0.0;
    const double fluor_ratio = gamma_c / gamma;  // branching of perturbed vs free decay
    if (LineComponent* up = scenario.channel.find(LineKind::fluorescence_upper)) {
        const LineComponent* base_up = cfg.channel.find(LineKind::fluorescence_upper);
        const double base_amp = base_up ? base_up->amplitude : 0.0;
        up->amplitude = coherent_amp * fluor_ratio;
        if (LineComponent* lo = scenario.channel.find(LineKind::fluorescence_lower)) {
            const LineComponent* base_lo = cfg.channel.find(LineKind::fluorescence_lower);
            const double share =
                (base_up && base_amp > 0.0 && base_lo) ? base_lo->amplitude / base_amp : 0.0;
            lo->amplitude = up->amplitude * share;
        }
    }

    // diffusion loss: Anti-Stokes signal-to-noise scales with pressure
    const double nbar = coherent_amp;
    double a_scaled = 0.0;
    if (nbar > 0.0 && cfg.correlation_amplitude > 0.0) {
        const double g2sas_minus_1 = 1.0 + 1.0 / nbar;
        const double chi2_ref =
            cfg.correlation_amplitude / (g2sas_minus_1 - cfg.correlation_amplitude);
        const double chi2 = chi2_ref * pressure_torr / kReferencePressure;
        a_scaled = g2sas_minus_1 * chi2 / (1.0 + chi2);
    }
    scenario.correlation_amplitude = a_scaled;

    // mean of four seeded measurements
    std::vector<ScanTrace> runs;
    for (uint64_t k = 0; k < 4; ++k) {
        ScanConfig run = scenario;
        run.seed = scenario.seed + k;
        runs.push_back(run_synthetic_scan(run));
    }
    ScanTrace avg = runs.front();
    std::ostringstream prov;
    prov << "low_pressure pressure_torr=" << pressure_torr << " mean_of=4 seed=" << scenario.seed;
    avg.provenance = prov.str();
    for (size_t i = 0; i < avg.points.size(); ++i) {
        double mean = 0.0, g2 = 0.0, var = 0.0;
        for (const auto& run : runs) {
            mean += run.points[i].mean_counts;
            g2 += run.points[i].g2;
            var += run.points[i].g2_sigma * run.points[i].g2_sigma;
        }
        avg.points[i].mean_counts = mean / 4.0;
        avg.points[i].g2 = g2 / 4.0;
        avg.points[i].g2_sigma = std::sqrt(var) / 4.0;
    }
    return avg;
}

void write_trace(std::ostream& out, const ScanTrace& trace,
                 const std::vector<std::string>& header_comments) {
    out << "# stokescan scan trace\n";
    out << "# provenance: " << trace.provenance << "\n";
    out << "# n_cycles_per_point: " << trace.n_cycles << "\n";
    for (const auto& line : header_comments) out << "# " << line << "\n";
    out << "# columns: frequency_ghz\tmean_counts\tg2\tg2_sigma\n";
    for (const auto& p : trace.points) {
        out << format_value(p.frequency) << '\t' << format_value(p.mean_counts) << '\t'
            << format_value(p.g2) << '\t' << format_value(p.g2_sigma) << '\n';
    }
}

ScanTrace read_trace(std::istream& in) {
    ScanTrace trace;
    trace.provenance = "ingested";
    std::string line;
    bool header_seen = false;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string columns_tag = "# columns:";
            if (line.rfind(columns_tag, 0) == 0) {
                std::istringstream hdr(line.substr(columns_tag.size()));
                std::vector<std::string> names;
                std::string name;
                while (hdr >> name) names.push_back(name);
                const std::vector<std::string> required = {"frequency_ghz", "mean_counts", "g2",
                                                           "g2_sigma"};
                for (const auto& want : required) {
                    bool found = false;
                    for (const auto& have : names)
                        if (have == want) found = true;
                    if (!found)
                        throw parse_error("trace header is missing column '" + want + "'");
                }
                if (names.size() != required.size() ||
                    !std::equal(names.begin(), names.end(), required.begin()))
                    throw parse_error("trace header must list columns frequency_ghz, mean_counts, "
                                      "g2, g2_sigma in order");
                header_seen = true;
            }
            continue;
        }
        if (!header_seen)
            throw parse_error("line " + std::to_string(line_no) +
                              ": data before the '# columns:' header");
        std::istringstream row(line);
        std::vector<double> fields;
        std::string token;
        while (row >> token) {
            char* end = nullptr;
            const double v = std::strtod(token.c_str(), &end);
            if (end == token.c_str() || *end != '\0')
                throw parse_error("line " + std::to_string(line_no) + ": not a number: '" + token +
                                  "'");
            fields.push_back(v);
        }
        if (fields.size() != 4)
            throw parse_error("line " + std::to_string(line_no) + ": malformed row (expected 4 columns, got " +
                              std::to_string(fields.size()) + ")");
        trace.points.push_back({fields[0], fields[1], fields[2], fields[3]});
    }
    if (!header_seen) throw parse_error("no '# columns:' header found (empty or foreign file)");
    if (trace.points.empty()) throw parse_error("trace contains no data rows");
    trace.validate();
    return trace;
}

}  // namespace stokes
