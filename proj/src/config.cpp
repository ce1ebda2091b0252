#include "stokes/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "stokes/format.hpp"

namespace stokes {

namespace {

std::string fmt(double v) { return format_double(v); }

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw parse_error("config: value of '" + key + "' is not a number: '" + value + "'");
    return v;
}

long parse_long(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw parse_error("config: value of '" + key + "' is not an integer: '" + value + "'");
    return v;
}

uint64_t parse_seed(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw parse_error("config: value of '" + key + "' is not an integer: '" + value + "'");
    return v;
}

EtalonResponse parse_response(const std::string& key, const std::string& value) {
    if (value == "airy") return EtalonResponse::airy;
    if (value == "lorentzian") return EtalonResponse::lorentzian;
    throw parse_error("config: '" + key + "' must be airy or lorentzian, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "0" || value == "false") return false;
    if (value == "1" || value == "true") return true;
    throw parse_error("config: '" + key + "' must be 0/1, got '" + value + "'");
}

// keeps the channel keys independent of construction order
struct ChannelKeys {
    double write_detuning = 0.8;
    double ground_split = 6.834;
    double excited_split = 0.812;
    double coherent_amplitude = 0.5;
    double fluorescence_amplitude = 0.5;
    double fluorescence_lower_amplitude = 0.0;
    double leakage_amplitude = 0.3;
    double background = 0.01;
    double gaussian_fwhm = 0.48;

    ChannelModel build(const EtalonConfig& etalon) const {
        ChannelModel m;
        m.write_detuning = write_detuning;
        m.hyperfine_ground_split = ground_split;
        m.excited_split = excited_split;
        m.background = background;
        m.etalon = etalon;
        const ProfileParams doppler{gaussian_fwhm, 0.0};
        m.components = {
            {LineKind::coherent_stokes, 0.0, coherent_amplitude, ProfileParams{0.0, 0.0}},
            {LineKind::fluorescence_upper, -write_detuning, fluorescence_amplitude, doppler},
            {LineKind::fluorescence_lower, -write_detuning - excited_split,
             fluorescence_lower_amplitude, doppler},
            {LineKind::laser_leakage, ground_split, leakage_amplitude, ProfileParams{0.0, 0.0}},
        };
        return m;
    }
};

ChannelKeys channel_keys_of(const ChannelModel& m) {
    ChannelKeys k;
    k.write_detuning = m.write_detuning;
    k.ground_split = m.hyperfine_ground_split;
    k.excited_split = m.excited_split;
    k.background = m.background;
    if (const auto* c = m.find(LineKind::coherent_stokes)) k.coherent_amplitude = c->amplitude;
    if (const auto* c = m.find(LineKind::fluorescence_upper)) {
        k.fluorescence_amplitude = c->amplitude;
        k.gaussian_fwhm = c->profile.gaussian_fwhm;
    }
    if (const auto* c = m.find(LineKind::fluorescence_lower))
        k.fluorescence_lower_amplitude = c->amplitude;
    if (const auto* c = m.find(LineKind::laser_leakage)) k.leakage_amplitude = c->amplitude;
    return k;
}

}  // namespace

std::string to_string(EtalonResponse response) {
    return response == EtalonResponse::airy ? "airy" : "lorentzian";
}

CollisionParams RunConfig::collision_params() const {
    CollisionParams p;
    p.gamma = gamma;
    p.gamma_c = collision_rate_from_pressure(broadening_coeff_mhz_per_torr, pressure_torr);
    p.noise_amplitude = noise_amplitude;
    p.detuning = detuning;
    p.drive = drive;
    p.collision_phase_spread = collision_phase_spread;
    return p;
}

void RunConfig::validate() const {
    scan.validate();
    const CollisionParams cp = collision_params();
    cp.validate();
    trajectory.validate(cp);
    if (!(coherent_window_hz > 0.0))
        throw invalid_parameter("config: coherent_window_hz must be > 0");
}

RunConfig default_config() {
    RunConfig cfg;
    ChannelKeys keys;
    cfg.scan.channel = keys.build(EtalonConfig{5.0, 0.48});
    return cfg;
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg = default_config();
    ChannelKeys channel;
    EtalonConfig etalon{5.0, 0.48};

    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (!s.empty() && s[0] == '#') continue;
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw parse_error("config line " + std::to_string(line_no) + ": malformed section");
            section = s.substr(1, s.size() - 2);
            if (section != "grid" && section != "etalon" && section != "channel" &&
                section != "scan" && section != "collisions" && section != "trajectory")
                throw parse_error("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw parse_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (qual == "grid.start_ghz") cfg.scan.grid.start = parse_double(qual, value);
        else if (qual == "grid.step_ghz") cfg.scan.grid.step = parse_double(qual, value);
        else if (qual == "grid.count") cfg.scan.grid.count = static_cast<int>(parse_long(qual, value));
        else if (qual == "etalon.fsr_ghz") etalon.fsr = parse_double(qual, value);
        else if (qual == "etalon.fwhm_ghz") etalon.fwhm = parse_double(qual, value);
        else if (qual == "channel.write_detuning_ghz") channel.write_detuning = parse_double(qual, value);
        else if (qual == "channel.hyperfine_ground_split_ghz") channel.ground_split = parse_double(qual, value);
        else if (qual == "channel.excited_split_ghz") channel.excited_split = parse_double(qual, value);
        else if (qual == "channel.coherent_amplitude") channel.coherent_amplitude = parse_double(qual, value);
        else if (qual == "channel.fluorescence_amplitude") channel.fluorescence_amplitude = parse_double(qual, value);
        else if (qual == "channel.fluorescence_lower_amplitude") channel.fluorescence_lower_amplitude = parse_double(qual, value);
        else if (qual == "channel.leakage_amplitude") channel.leakage_amplitude = parse_double(qual, value);
        else if (qual == "channel.background") channel.background = parse_double(qual, value);
        else if (qual == "channel.gaussian_fwhm_ghz") channel.gaussian_fwhm = parse_double(qual, value);
        else if (qual == "scan.n_cycles_per_point") cfg.scan.n_cycles_per_point = parse_long(qual, value);
        else if (qual == "scan.repetition_rate_hz") cfg.scan.repetition_rate_hz = parse_double(qual, value);
        else if (qual == "scan.antistokes_mean") cfg.scan.antistokes_mean = parse_double(qual, value);
        else if (qual == "scan.correlation_amplitude") cfg.scan.correlation_amplitude = parse_double(qual, value);
        else if (qual == "scan.seed") cfg.scan.seed = parse_seed(qual, value);
        else if (qual == "scan.synth_etalon") cfg.scan.synth_response = parse_response(qual, value);
        else if (qual == "scan.fit_etalon") cfg.fit_response = parse_response(qual, value);
        else if (qual == "scan.float_gaussian_width") cfg.float_gaussian_width = parse_bool(qual, value);
        else if (qual == "collisions.gamma") cfg.gamma = parse_double(qual, value);
        else if (qual == "collisions.noise_amplitude") cfg.noise_amplitude = parse_double(qual, value);
        else if (qual == "collisions.detuning") cfg.detuning = parse_double(qual, value);
        else if (qual == "collisions.drive") cfg.drive = parse_double(qual, value);
        else if (qual == "collisions.collision_phase_spread") cfg.collision_phase_spread = parse_double(qual, value);
        else if (qual == "collisions.pressure_torr") cfg.pressure_torr = parse_double(qual, value);
        else if (qual == "collisions.broadening_coeff_mhz_per_torr") cfg.broadening_coeff_mhz_per_torr = parse_double(qual, value);
        else if (qual == "collisions.coherent_window_hz") cfg.coherent_window_hz = parse_double(qual, value);
        else if (qual == "trajectory.duration") cfg.trajectory.duration = parse_double(qual, value);
        else if (qual == "trajectory.dt") cfg.trajectory.dt = parse_double(qual, value);
        else if (qual == "trajectory.n_trajectories") cfg.trajectory.n_trajectories = static_cast<int>(parse_long(qual, value));
        else if (qual == "trajectory.record_every") cfg.trajectory.record_every = static_cast<int>(parse_long(qual, value));
        else if (qual == "trajectory.seed") cfg.trajectory.seed = parse_seed(qual, value);
        else if (qual == "trajectory.burn_in") cfg.trajectory.burn_in = parse_double(qual, value);
        else throw parse_error("config: unknown key '" + qual + "'");
    }

    cfg.scan.channel = channel.build(etalon);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("config: cannot open '" + path + "'");
    return parse_config(in);
}

std::vector<std::string> emit_config(const RunConfig& cfg) {
    const ChannelKeys keys = channel_keys_of(cfg.scan.channel);
    const EtalonConfig& etalon = cfg.scan.channel.etalon;
    std::vector<std::string> out;
    auto kv = [&out](const std::string& k, const std::string& v) { out.push_back(k + " = " + v); };

    out.push_back("[grid]");
    kv("start_ghz", fmt(cfg.scan.grid.start));
    kv("step_ghz", fmt(cfg.scan.grid.step));
    kv("count", std::to_string(cfg.scan.grid.count));
    out.push_back("[etalon]");
    kv("fsr_ghz", fmt(etalon.fsr));
    kv("fwhm_ghz", fmt(etalon.fwhm));
    out.push_back("[channel]");
    kv("write_detuning_ghz", fmt(keys.write_detuning));
    kv("hyperfine_ground_split_ghz", fmt(keys.ground_split));
    kv("excited_split_ghz", fmt(keys.excited_split));
    kv("coherent_amplitude", fmt(keys.coherent_amplitude));
    kv("fluorescence_amplitude", fmt(keys.fluorescence_amplitude));
    kv("fluorescence_lower_amplitude", fmt(keys.fluorescence_lower_amplitude));
    kv("leakage_amplitude", fmt(keys.leakage_amplitude));
    kv("background", fmt(keys.background));
    kv("gaussian_fwhm_ghz", fmt(keys.gaussian_fwhm));
    out.push_back("[scan]");
    kv("n_cycles_per_point", std::to_string(cfg.scan.n_cycles_per_point));
    kv("repetition_rate_hz", fmt(cfg.scan.repetition_rate_hz));
    kv("antistokes_mean", fmt(cfg.scan.antistokes_mean));
    kv("correlation_amplitude", fmt(cfg.scan.correlation_amplitude));
    kv("seed", std::to_string(cfg.scan.seed));
    kv("synth_etalon", to_string(cfg.scan.synth_response));
    kv("fit_etalon", to_string(cfg.fit_response));
    kv("float_gaussian_width", cfg.float_gaussian_width ? "1" : "0");
    out.push_back("[collisions]");
    kv("gamma", fmt(cfg.gamma));
    kv("noise_amplitude", fmt(cfg.noise_amplitude));
    kv("detuning", fmt(cfg.detuning));
    kv("drive", fmt(cfg.drive));
    kv("collision_phase_spread", fmt(cfg.collision_phase_spread));
    kv("pressure_torr", fmt(cfg.pressure_torr));
    kv("broadening_coeff_mhz_per_torr", fmt(cfg.broadening_coeff_mhz_per_torr));
    kv("coherent_window_hz", fmt(cfg.coherent_window_hz));
    out.push_back("[trajectory]");
    kv("duration", fmt(cfg.trajectory.duration));
    kv("dt", fmt(cfg.trajectory.dt));
    kv("n_trajectories", std::to_string(cfg.trajectory.n_trajectories));
    kv("record_every", std::to_string(cfg.trajectory.record_every));
    kv("seed", std::to_string(cfg.trajectory.seed));
    kv("burn_in", fmt(cfg.trajectory.burn_in));
    return out;
}

}  // namespace stokes
