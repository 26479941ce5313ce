#pragma once

// Flat key-value run configuration. Every key has a text default; a Config
// holds the effective text of each key so that a snapshot reproduces a run
// exactly. Frequencies in config files are in Hz.

#include "rsc/analysis.hpp"
#include "rsc/cooling.hpp"
#include "rsc/detection.hpp"
#include "rsc/physics.hpp"
#include "rsc/spectroscopy.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace rsc {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string doc;
};

const std::vector<ConfigKey>& config_schema();

class Config {
public:
    Config(); // all defaults

    // Applies "key = value" lines. '#' starts a comment. Unknown keys and
    // malformed lines raise ConfigError with the line number.
    void merge_text(const std::string& text);
    void merge_file(const std::string& path);
    void set(const std::string& key, const std::string& value, int line = 0);

    const std::string& get(const std::string& key) const;
    int line_of(const std::string& key) const;

    // Every key in schema order, one "key = value" per line.
    std::string snapshot() const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

struct RunConfig {
    TrapConfig trap;
    CavityConfig cavity;
    CoolingConfig cooling;
    DetectionConfig detection;
    TrialConfig trial;
    AnalysisConfig analysis;
    bool analysis_enabled = true;
    std::size_t histogram_windows = 100000;
    std::vector<double> spectrum_detunings_hz;
    ScanAxis scan_axis = ScanAxis::RamanDetuning;
    std::vector<double> scan_values;

    SpectroscopyConfig spectroscopy() const { return {trap, cooling, trial, detection}; }
};

// Converts and validates; field-level failures raise ConfigError naming the key.
RunConfig build_run_config(const Config& config);

// "a, b, c", "start:step:stop" (inclusive) or "log:start:stop:count".
std::vector<double> parse_grid(const std::string& text);

const std::vector<std::string>& preset_names();
// Text of an embedded preset; ConfigError if unknown.
const std::string& preset_text(const std::string& name);

} // namespace rsc
