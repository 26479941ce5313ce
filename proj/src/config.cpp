#include "rsc/config.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>

namespace rsc {

// Generated from presets/*.conf at configure time.
const std::vector<std::pair<std::string, std::string>>& embedded_presets();

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"trap.axial_frequency_hz", "530000", "axial trap frequency omega_a / 2pi"},
        {"trap.radial_frequency_hz", "4500", "radial trap frequency omega_r / 2pi"},
        {"trap.fort_wavelength_m", "9.356e-07", "FORT wavelength"},
        {"trap.raman_wavelength_m", "9.456e-07", "Raman beam wavelength"},
        {"trap.fort_depth_hz", "-41000000", "FORT depth U_F / h"},
        {"trap.raman_stark_shift_hz", "840000", "differential Stark shift of the Raman beams"},
        {"trap.base_rabi_hz", "200000", "Raman Rabi frequency Omega_0 / 2pi at alpha = 0"},
        {"trap.spatial_phase_rad", "0.78539816339744828", "spatial phase alpha (fixed-phase mode and cooling scans)"},
        {"trap.atom_mass_amu", "132.905451961", "atomic mass"},
        {"cavity.coupling_hz", "34000000", "g0 / 2pi"},
        {"cavity.field_decay_hz", "4100000", "kappa / 2pi"},
        {"cavity.atomic_decay_hz", "2600000", "gamma / 2pi"},
        {"cooling.raman_detuning_hz", "-525000", "Raman detuning during cooling"},
        {"cooling.repump_intensity_isat", "0.5", "Omega_4 intensity I_4 / I_sat"},
        {"cooling.repump_detuning_hz", "10000000", "Omega_4 detuning from F=4 -> F'=4'"},
        {"cooling.pump_linewidth_hz", "5200000", "excited-state linewidth Gamma / 2pi"},
        {"cooling.recoil_lamb_dicke", "auto", "eta_s for 852 nm emission; auto derives it from the trap"},
        {"cooling.emission_geometry", "0.33333333333333331", "axial projection factor xi of emission recoil"},
        {"cooling.n_max", "40", "ladder truncation"},
        {"cooling.duration_s", "0.005", "evolution time for standalone cooling runs"},
        {"cooling.initial_nbar", "2", "thermal mean occupation before cooling"},
        {"cooling.include_raise_sideband", "true", "off-resonant n -> n+1 Raman channel"},
        {"cooling.stimulated_return", "true", "F=4 -> F=3 return at the forward Raman rate"},
        {"cooling.carrier_scale", "1", "multiplier on the carrier Rabi frequency"},
        {"cooling.sideband_scale", "1", "multiplier on the sideband Rabi frequencies"},
        {"detection.window_s", "0.0001", "probe window T_d"},
        {"detection.expected_counts", "30", "N_e, mean counts through an empty cavity"},
        {"detection.blocked_mean", "0.5", "N_b, mean counts with an F=4 atom"},
        {"detection.flip_rate_4to3_per_s", "0", "F=4 -> F=3 flip rate during probing"},
        {"detection.flip_rate_3to4_per_s", "0", "F=3 -> F=4 flip rate during probing"},
        {"detection.lower_threshold", "0.25", "F4 present if N < lower * N_e"},
        {"detection.upper_threshold", "0.75", "F4 absent if N > upper * N_e"},
        {"detection.histogram_windows", "100000", "simulated windows per true state for histograms"},
        {"trial.cool_duration_s", "0.005", "cooling interval Delta t_c before each Raman pulse"},
        {"trial.pump_pulse_pairs", "10", "optical pumping pulse pairs"},
        {"trial.pump_success_per_pair", "0.9", "F=4 -> F=3 pumping probability per pair"},
        {"trial.pump_pulse_length_s", "1e-06", "length of each pumping pulse"},
        {"trial.raman_duration_s", "0.0005", "Raman pulse Delta t_R"},
        {"trial.trials_per_sign", "299", "trials per atom at each sign of the detuning"},
        {"trial.atoms_per_point", "33", "atoms pooled per spectrum point"},
        {"trial.residual_field_gauss", "0.04", "residual magnetic field"},
        {"trial.survival_lifetime_s", "inf", "trap lifetime"},
        {"trial.transfer_model", "averaged", "averaged | coherent"},
        {"trial.background", "0.024", "state-independent false transfer probability"},
        {"trial.phase_mode", "random", "random | fixed (uses trap.spatial_phase_rad)"},
        {"trial.injected_nbar", "none", "bypass cooling with a thermal ladder of this mean"},
        {"trial.include_delta_m2", "false", "add Delta m = +-2 Raman lines"},
        {"trial.zeeman_g3", "-0.25", "Lande g-factor of F=3"},
        {"trial.zeeman_g4", "0.25", "Lande g-factor of F=4"},
        {"spectrum.detunings_hz", "0:10000:700000", "detuning magnitudes |delta_R| / 2pi"},
        {"analysis.enabled", "true", "run the three background modes after a spectrum"},
        {"analysis.window_halfwidth_hz", "30000", "sideband window half-width around omega_a"},
        {"analysis.background", "0.024", "constant background for constant_background mode"},
        {"analysis.carrier_halfwidth_hz", "400000", "points with |delta| below this enter the carrier fit"},
        {"scan.axis", "delta_r", "delta_r | i4"},
        {"scan.values", "-600000:20000:-400000", "scan grid (Hz for delta_r, I_sat units for i4)"},
    };
    return schema;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool known_key(const std::string& key) {
    const auto& schema = config_schema();
    return std::any_of(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.name == key; });
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno != ERANGE && !std::isnan(out);
}

} // namespace

Config::Config() {
    for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value, int line) {
    if (!known_key(key)) throw ConfigError("unknown key", line, key);
    values_[key] = value;
    lines_[key] = line;
}

void Config::merge_text(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key", line);
        if (value.empty()) throw ConfigError("missing value", line, key);
        set(key, value, line);
    }
}

void Config::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    merge_text(buffer.str());
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key", 0, key);
    return it->second;
}

int Config::line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
}

std::string Config::snapshot() const {
    std::string out;
    for (const auto& k : config_schema()) out += k.name + " = " + values_.at(k.name) + "\n";
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    const std::string t = trim(text);
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string part;
        std::istringstream in(s);
        while (std::getline(in, part, sep)) parts.push_back(trim(part));
        return parts;
    };
    auto number = [](const std::string& s) {
        double v;
        if (!parse_double(s, v) || !std::isfinite(v)) throw DomainError("not a number: '" + s + "'");
        return v;
    };

    std::vector<double> values;
    if (t.rfind("log:", 0) == 0) {
        const auto parts = split(t.substr(4), ':');
        if (parts.size() != 3) throw DomainError("log grid needs log:start:stop:count");
        const double a = number(parts[0]), b = number(parts[1]), c = number(parts[2]);
        if (!(a > 0.0 && b > 0.0) || c < 1.0 || c != std::floor(c)) throw DomainError("bad log grid");
        const int count = static_cast<int>(c);
        for (int i = 0; i < count; ++i)
            values.push_back(count == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / (count - 1)));
        return values;
    }
    if (t.find(':') != std::string::npos) {
        const auto parts = split(t, ':');
        if (parts.size() != 3) throw DomainError("range grid needs start:step:stop");
        const double a = number(parts[0]), step = number(parts[1]), b = number(parts[2]);
        if (step == 0.0 || (b - a) / step < 0.0) throw DomainError("range step does not reach stop");
        const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) values.push_back(a + static_cast<double>(i) * step);
        return values;
    }
    for (const auto& part : split(t, ','))
        if (!part.empty()) values.push_back(number(part));
    return values;
}

namespace {

class Reader {
public:
    explicit Reader(const Config& c) : c_(c) {}

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ConfigError(message, c_.line_of(key), key);
    }

    double real(const std::string& key) const {
        double v;
        if (!parse_double(c_.get(key), v)) fail(key, "expected a number, got '" + c_.get(key) + "'");
        return v;
    }
    double frequency(const std::string& key) const { return hz(real(key)); }
    int integer(const std::string& key) const {
        const std::string& t = c_.get(key);
        char* end = nullptr;
        errno = 0;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size() || t.empty() || errno == ERANGE || v < -2147483647L || v > 2147483647L)
            fail(key, "expected an integer, got '" + t + "'");
        return static_cast<int>(v);
    }
    bool boolean(const std::string& key) const {
        const std::string& t = c_.get(key);
        if (t == "true") return true;
        if (t == "false") return false;
        fail(key, "expected true or false, got '" + t + "'");
    }
    std::vector<double> grid(const std::string& key) const {
        try {
            return parse_grid(c_.get(key));
        } catch (const DomainError& e) {
            fail(key, e.what());
        }
    }
    template <class F>
    auto parsed(const std::string& key, F&& parse) const {
        try {
            return parse(c_.get(key));
        } catch (const DomainError& e) {
            fail(key, e.what());
        }
    }
    const std::string& text(const std::string& key) const { return c_.get(key); }

private:
    const Config& c_;
};

// Runs a validate() call and reattributes its error to a config section.
template <class T>
void validate_section(const T& section, const std::string& name) {
    try {
        section.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what(), 0, name);
    }
}

} // namespace

RunConfig build_run_config(const Config& config) {
    const Reader r(config);
    RunConfig rc;

    rc.trap.axial_frequency = r.frequency("trap.axial_frequency_hz");
    rc.trap.radial_frequency = r.frequency("trap.radial_frequency_hz");
    rc.trap.fort_wavelength = r.real("trap.fort_wavelength_m");
    rc.trap.raman_wavelength = r.real("trap.raman_wavelength_m");
    rc.trap.fort_depth_hz = r.real("trap.fort_depth_hz");
    rc.trap.raman_stark_shift = r.frequency("trap.raman_stark_shift_hz");
    rc.trap.base_rabi = r.frequency("trap.base_rabi_hz");
    rc.trap.spatial_phase = r.real("trap.spatial_phase_rad");
    rc.trap.atom_mass = r.real("trap.atom_mass_amu") * constants::atomic_mass_unit;
    validate_section(rc.trap, "trap");

    rc.cavity.coupling = r.frequency("cavity.coupling_hz");
    rc.cavity.field_decay = r.frequency("cavity.field_decay_hz");
    rc.cavity.atomic_decay = r.frequency("cavity.atomic_decay_hz");

    rc.cooling.raman_detuning = r.frequency("cooling.raman_detuning_hz");
    rc.cooling.repump_intensity = r.real("cooling.repump_intensity_isat");
    rc.cooling.repump_detuning = r.frequency("cooling.repump_detuning_hz");
    rc.cooling.pump_linewidth = r.frequency("cooling.pump_linewidth_hz");
    if (r.text("cooling.recoil_lamb_dicke") == "auto") {
        rc.cooling.recoil_lamb_dicke = lamb_dicke(constants::cesium_d2_wavelength,
                                                  ground_state_size(rc.trap.atom_mass, rc.trap.axial_frequency));
    } else {
        rc.cooling.recoil_lamb_dicke = r.real("cooling.recoil_lamb_dicke");
    }
    rc.cooling.emission_geometry = r.real("cooling.emission_geometry");
    rc.cooling.n_max = r.integer("cooling.n_max");
    rc.cooling.duration = r.real("cooling.duration_s");
    rc.cooling.initial_nbar = r.real("cooling.initial_nbar");
    rc.cooling.include_raise_sideband = r.boolean("cooling.include_raise_sideband");
    rc.cooling.stimulated_return = r.boolean("cooling.stimulated_return");
    rc.cooling.carrier_scale = r.real("cooling.carrier_scale");
    rc.cooling.sideband_scale = r.real("cooling.sideband_scale");
    validate_section(rc.cooling, "cooling");

    rc.detection.window = r.real("detection.window_s");
    rc.detection.expected_counts = r.real("detection.expected_counts");
    rc.detection.blocked_mean = r.real("detection.blocked_mean");
    rc.detection.flip_rate_4to3 = r.real("detection.flip_rate_4to3_per_s");
    rc.detection.flip_rate_3to4 = r.real("detection.flip_rate_3to4_per_s");
    rc.detection.lower_threshold = r.real("detection.lower_threshold");
    rc.detection.upper_threshold = r.real("detection.upper_threshold");
    const int windows = r.integer("detection.histogram_windows");
    if (windows < 1) r.fail("detection.histogram_windows", "must be at least 1");
    rc.histogram_windows = static_cast<std::size_t>(windows);
    validate_section(rc.detection, "detection");

    rc.trial.cool_duration = r.real("trial.cool_duration_s");
    rc.trial.pump_pulse_pairs = r.integer("trial.pump_pulse_pairs");
    rc.trial.pump_success_per_pair = r.real("trial.pump_success_per_pair");
    rc.trial.pump_pulse_length = r.real("trial.pump_pulse_length_s");
    rc.trial.raman_duration = r.real("trial.raman_duration_s");
    rc.trial.trials_per_sign = r.integer("trial.trials_per_sign");
    rc.trial.atoms_per_point = r.integer("trial.atoms_per_point");
    rc.trial.residual_field = r.real("trial.residual_field_gauss") * constants::gauss;
    rc.trial.survival_lifetime = r.real("trial.survival_lifetime_s");
    rc.trial.transfer_model = r.parsed("trial.transfer_model", parse_transfer_model);
    rc.trial.background = r.real("trial.background");
    rc.trial.phase_mode = r.parsed("trial.phase_mode", parse_phase_mode);
    if (r.text("trial.injected_nbar") != "none") rc.trial.injected_nbar = r.real("trial.injected_nbar");
    rc.trial.include_delta_m2 = r.boolean("trial.include_delta_m2");
    rc.trial.zeeman.g3 = r.real("trial.zeeman_g3");
    rc.trial.zeeman.g4 = r.real("trial.zeeman_g4");
    validate_section(rc.trial, "trial");

    rc.spectrum_detunings_hz = r.grid("spectrum.detunings_hz");
    for (double d : rc.spectrum_detunings_hz)
        if (d < 0.0) r.fail("spectrum.detunings_hz", "detuning magnitudes must be non-negative");

    rc.analysis_enabled = r.boolean("analysis.enabled");
    rc.analysis.axial_frequency = rc.trap.axial_frequency;
    rc.analysis.window_halfwidth = r.frequency("analysis.window_halfwidth_hz");
    rc.analysis.background = r.real("analysis.background");
    rc.analysis.carrier_halfwidth = r.frequency("analysis.carrier_halfwidth_hz");

    rc.scan_axis = r.parsed("scan.axis", parse_scan_axis);
    rc.scan_values = r.grid("scan.values");
    return rc;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, text] : embedded_presets()) out.push_back(name);
        return out;
    }();
    return names;
}

const std::string& preset_text(const std::string& name) {
    for (const auto& [n, text] : embedded_presets())
        if (n == name) return text;
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")", 0, "--preset");
}

} // namespace rsc
