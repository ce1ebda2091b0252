#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stokes/collisions.hpp"
#include "stokes/scan.hpp"

namespace stokes {

// Everything a batch run needs, loaded from a flat [section] key = value file.
// Unknown sections or keys are rejected; every value is range-checked against
// the module invariants at load time.
struct RunConfig {
    ScanConfig scan;
    EtalonResponse fit_response = EtalonResponse::lorentzian;
    bool float_gaussian_width = false;

    double gamma = 3.6e7;  // D1 decay rate, 1/s
    double noise_amplitude = 0.0;
    double detuning = 5.0265482457436692e9;  // 2 pi * 0.8 GHz, rad/s
    double drive = 5.0e8;
    double collision_phase_spread = 6.283185307179586;
    double pressure_torr = 7.0;
    double broadening_coeff_mhz_per_torr = 7.0;
    double coherent_window_hz = 5.0e7;

    TrajectoryConfig trajectory{1.4e-6, 1.5e-11, 1000, 2, 8, -1.0};

    CollisionParams collision_params() const;
    void validate() const;
};

RunConfig default_config();

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// Canonical emission: "[section]" and "key = value" lines. Loading the emitted
// lines reproduces every value exactly.
std::vector<std::string> emit_config(const RunConfig& cfg);

std::string to_string(EtalonResponse response);

}  // namespace stokes
