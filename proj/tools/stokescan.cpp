// stokescan: batch reproduction of frequency-resolved vapor-cell scans.
//   synth    synthesize a Fabry-Perot scan trace (intensity + g2)
//   fit      fit the channel model and the g2 curve to a trace
//   collide  stochastic emitter spectrum and coherent/incoherent weights

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stokes/config.hpp"
#include "stokes/format.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;
constexpr int kExitNotConverged = 4;

std::string fmt(double v) { return stokes::format_double(v); }

std::vector<std::string> provenance(const stokes::RunConfig& cfg) {
    return stokes::emit_config(cfg);
}

int write_or_io_error(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "stokescan: cannot open output file '" << path << "'\n";
        return kExitIo;
    }
    out << body;
    out.flush();
    if (!out) {
        std::cerr << "stokescan: failed writing '" << path << "'\n";
        return kExitIo;
    }
    return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_path, bool seed_set,
              uint64_t seed) {
    stokes::RunConfig cfg = stokes::load_config(config_path);
    if (seed_set) cfg.scan.seed = seed;
    const stokes::ScanTrace trace = stokes::run_synthetic_scan(cfg.scan);
    std::ostringstream body;
    stokes::write_trace(body, trace, provenance(cfg));
    return write_or_io_error(out_path, body.str());
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_path, const std::string& fit_etalon) {
    stokes::RunConfig cfg = stokes::load_config(config_path);
    if (fit_etalon == "airy") cfg.fit_response = stokes::EtalonResponse::airy;
    else if (fit_etalon == "lorentzian") cfg.fit_response = stokes::EtalonResponse::lorentzian;
    else if (!fit_etalon.empty()) throw stokes::parse_error("--fit-etalon must be airy or lorentzian");

    std::ifstream in(data_path);
    if (!in) {
        std::cerr << "stokescan: cannot open data file '" << data_path << "'\n";
        return kExitIo;
    }
    const stokes::ScanTrace trace = stokes::read_trace(in);

    stokes::AnalyzeOptions options;
    options.initial_model = cfg.scan.channel;
    options.fit_response = cfg.fit_response;
    options.float_gaussian_width = cfg.float_gaussian_width;
    options.n_cycles = cfg.scan.n_cycles_per_point;
    const stokes::AnalysisReport report = stokes::analyze_scan(trace, options);

    std::ostringstream body;
    body << "# stokescan analysis report\n";
    body << "# data: " << data_path << "\n";
    for (const auto& line : provenance(cfg)) body << "# " << line << "\n";
    const auto emit_fit = [&body](const std::string& name, const stokes::FitResult& fr) {
        body << "[" << name << "]\n";
        body << "converged = " << (fr.converged ? 1 : 0) << "\n";
        body << "iterations = " << fr.iterations << "\n";
        body << "chi_square = " << fmt(fr.chi_square) << "\n";
        body << "reduced_chi_square = " << fmt(fr.reduced_chi_square) << "\n";
        body << "n_points = " << fr.residuals.size() << "\n";
        body << "message = " << fr.message << "\n";
        body << "[" << name << ".parameters]\n";
        for (size_t i = 0; i < fr.names.size(); ++i)
            body << fr.names[i] << " = " << fmt(fr.values[i]) << " " << fmt(fr.sigmas[i]) << "\n";
    };
    emit_fit("intensity_fit", report.intensity_fit);
    emit_fit("g2_fit", report.g2_fit);
    body << "[diagnostics]\n";
    body << "correlation_amplitude = " << fmt(report.correlation_amplitude) << " "
         << fmt(report.correlation_amplitude_sigma) << "\n";
    body << "peak_separation_ghz = " << fmt(report.separation.value) << " "
         << fmt(report.separation.sigma) << "\n";

    const int io = write_or_io_error(out_path, body.str());
    if (io != kExitOk) return io;
    if (!report.intensity_fit.converged || !report.g2_fit.converged) {
        std::cerr << "stokescan: fit flagged as not converged (report written)\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_collide(const std::string& config_path, const std::string& out_path, bool seed_set,
                uint64_t seed) {
    stokes::RunConfig cfg = stokes::load_config(config_path);
    if (seed_set) cfg.trajectory.seed = seed;
    const stokes::CollisionParams params = cfg.collision_params();
    const stokes::TrajectorySet set = stokes::simulate_dipole(params, cfg.trajectory);
    const stokes::EmissionSpectrum spectrum = stokes::emission_spectrum(set);
    const stokes::FractionEstimate frac =
        stokes::coherent_fraction_stats(set, cfg.coherent_window_hz);

    const double coherent = frac.fraction;
    const double incoherent = 1.0 - coherent;
    const double ratio = coherent > 0.0 ? incoherent / coherent : INFINITY;
    const double ratio_sigma = coherent > 0.0 ? frac.sigma / (coherent * coherent) : INFINITY;

    std::ostringstream body;
    body << "# stokescan emission spectrum\n";
    for (const auto& line : provenance(cfg)) body << "# " << line << "\n";
    body << "# summary: coherent_fraction = " << fmt(coherent) << "\n";
    body << "# summary: coherent_fraction_sigma = " << fmt(frac.sigma) << "\n";
    body << "# summary: incoherent_coherent_ratio = " << fmt(ratio) << "\n";
    body << "# summary: incoherent_coherent_ratio_sigma = " << fmt(ratio_sigma) << "\n";
    body << "# summary: reference_gamma_c_over_gamma = " << fmt(params.gamma_c / params.gamma)
         << "\n";
    body << "# columns: frequency_offset_hz\tspectral_density_per_hz\n";
    for (size_t k = 0; k < spectrum.offset_hz.size(); ++k)
        body << fmt(spectrum.offset_hz[k]) << '\t' << fmt(spectrum.density[k]) << '\n';
    return write_or_io_error(out_path, body.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale reproduction of collision-broadened Raman scans"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, fit_etalon;
    uint64_t seed = 0;

    auto* synth = app.add_subcommand("synth", "synthesize a scan trace");
    synth->add_option("--config", config_path)->required();
    synth->add_option("--out", out_path)->required();
    auto* synth_seed = synth->add_option("--seed", seed, "overrides the config seed");

    auto* fit = app.add_subcommand("fit", "fit a scan trace");
    fit->add_option("--data", data_path)->required();
    fit->add_option("--config", config_path)->required();
    fit->add_option("--out", out_path)->required();
    fit->add_option("--fit-etalon", fit_etalon, "airy or lorentzian");

    auto* collide = app.add_subcommand("collide", "stochastic emitter spectrum");
    collide->add_option("--config", config_path)->required();
    collide->add_option("--out", out_path)->required();
    auto* collide_seed = collide->add_option("--seed", seed, "overrides the config seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(config_path, out_path, !synth_seed->empty(), seed);
        if (fit->parsed()) return cmd_fit(data_path, config_path, out_path, fit_etalon);
        if (collide->parsed())
            return cmd_collide(config_path, out_path, !collide_seed->empty(), seed);
    } catch (const stokes::degenerate_fit_error& e) {
        std::cerr << "stokescan: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const std::invalid_argument& e) {
        std::cerr << "stokescan: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::runtime_error& e) {
        std::cerr << "stokescan: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "stokescan: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
