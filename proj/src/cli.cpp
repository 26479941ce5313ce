#include "rsc/cli.hpp"

#include "rsc/config.hpp"
#include "rsc/errors.hpp"
#include "rsc/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>

#ifndef RSC_VERSION
#define RSC_VERSION "dev"
#endif

namespace rsc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* manifest_name = "manifest.json";
constexpr const char* snapshot_name = "config.snapshot.conf";

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::uint64_t seed = 1;
    std::string out = "out";
};

struct Run {
    std::string subcommand;
    CommonOptions options;
    Config config;
    RunConfig run;
    fs::path out;
    std::vector<std::string> outputs;
    json extra = json::object();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& name, const std::string& contents) {
        write_file((out / name).string(), contents);
        outputs.push_back(name);
    }

    void write_table(const std::string& stem, CsvTable table) {
        table.metadata.insert(table.metadata.begin(), {"manifest", manifest_name});
        write(stem + ".csv", write_csv(table));
        write(stem + ".svg", render_svg(table));
    }

    void finish() {
        write_file((out / snapshot_name).string(), config.snapshot());
        json m;
        m["subcommand"] = subcommand;
        m["seed"] = options.seed;
        m["preset"] = options.preset.empty() ? json(nullptr) : json(options.preset);
        m["config_snapshot"] = snapshot_name;
        m["outputs"] = outputs;
        m["version"] = RSC_VERSION;
        for (auto& [k, v] : extra.items()) m[k] = v;
        m["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_file((out / manifest_name).string(), m.dump(2) + "\n");
    }
};

Run prepare(const std::string& subcommand, const CommonOptions& options) {
    Run run;
    run.subcommand = subcommand;
    run.options = options;
    if (!options.preset.empty()) run.config.merge_text(preset_text(options.preset));
    if (!options.config_path.empty()) run.config.merge_file(options.config_path);
    run.run = build_run_config(run.config);
    run.out = options.out;
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec || !fs::is_directory(run.out)) throw std::runtime_error("cannot create output directory '" + options.out + "'");
    return run;
}

json fit_json(const LorentzianFit& f) {
    return {{"amplitude", f.amplitude},
            {"center_hz", to_hz(f.center)},
            {"fwhm_hz", to_hz(f.fwhm)},
            {"offset", f.offset},
            {"errors", {{"amplitude", f.errors[0]},
                        {"center_hz", to_hz(f.errors[1])},
                        {"fwhm_hz", to_hz(f.errors[2])},
                        {"offset", f.errors[3]}}},
            {"residual_norm", f.residual_norm},
            {"converged", f.converged},
            {"iterations", f.iterations}};
}

// Runs all three background modes; a mode whose inference is invalid reports its error.
void run_analysis(Run& run, const std::vector<SpectrumPoint>& points, const std::string& input_name,
                  const std::string& input_bytes) {
    const std::string digest = sha256_hex(input_bytes);
    json results = json::array();
    for (const auto mode :
         {BackgroundMode::LorentzianSubtracted, BackgroundMode::ConstantBackground, BackgroundMode::Raw}) {
        json entry;
        entry["mode"] = to_string(mode);
        entry["provenance"] = {{"input", input_name},
                               {"input_sha256", digest},
                               {"mode", to_string(mode)},
                               {"window_halfwidth_hz", to_hz(run.run.analysis.window_halfwidth)}};
        entry["window_halfwidth_hz"] = to_hz(run.run.analysis.window_halfwidth);
        try {
            const AnalysisResult r = analyze(points, mode, run.run.analysis);
            entry["r0"] = r.ratio.r0;
            entry["r0_err"] = r.ratio.sigma;
            entry["nbar"] = r.thermometry.nbar;
            entry["nbar_err"] = r.thermometry.nbar_error;
            entry["p0"] = r.thermometry.p0;
            entry["p0_err"] = r.thermometry.p0_error;
            entry["red_mean"] = r.ratio.red_mean;
            entry["blue_mean"] = r.ratio.blue_mean;
            entry["pairs"] = r.ratio.pairs;
            if (r.fit) {
                entry["fit"] = fit_json(*r.fit);
                run.write_table("fit_residuals",
                                residual_table(carrier_region(points, run.run.analysis.carrier_halfwidth), *r.fit));
            }
        } catch (const DomainError& e) {
            entry["error"] = e.what();
        } catch (const NumericalError& e) {
            entry["error"] = e.what();
        }
        results.push_back(entry);
    }
    json doc;
    doc["manifest"] = manifest_name;
    doc["axial_frequency_hz"] = to_hz(run.run.analysis.axial_frequency);
    doc["results"] = results;
    run.write("analysis.json", doc.dump(2) + "\n");
}

void cmd_detect_histogram(const CommonOptions& options) {
    Run run = prepare("detect-histogram", options);
    const auto rows = count_histogram(run.run.detection, run.run.histogram_windows, options.seed);
    run.write_table("histogram", histogram_table(rows, run.run.detection));
    run.finish();
}

void cmd_spectrum(const CommonOptions& options) {
    Run run = prepare("spectrum", options);
    if (run.run.spectrum_detunings_hz.empty())
        throw ConfigError("empty detuning grid", run.config.line_of("spectrum.detunings_hz"), "spectrum.detunings_hz");
    std::vector<double> magnitudes;
    for (double d : run.run.spectrum_detunings_hz) magnitudes.push_back(hz(d));
    const auto points = acquire_spectrum(magnitudes, run.run.spectroscopy(), options.seed);

    CsvTable table = spectrum_table(points);
    table.metadata.insert(table.metadata.begin(), {"manifest", manifest_name});
    const std::string csv = write_csv(table);
    run.write("spectrum.csv", csv);
    run.write("spectrum.svg", render_svg(table));
    if (run.run.analysis_enabled) run_analysis(run, spectrum_from_table(table), "spectrum.csv", csv);
    run.finish();
}

void cmd_cooling_scan(const CommonOptions& options) {
    Run run = prepare("cooling-scan", options);
    if (run.run.scan_values.empty())
        throw ConfigError("empty scan grid", run.config.line_of("scan.values"), "scan.values");
    const auto rows = cooling_scan(run.run.trap, run.run.cooling, run.run.scan_axis, run.run.scan_values);
    run.write_table("cooling_scan", scan_table(rows));
    run.finish();
}

void cmd_analyze(const CommonOptions& options, const std::string& input) {
    Run run = prepare("analyze", options);
    const std::string bytes = read_file(input);
    const auto points = spectrum_from_table(parse_csv(bytes));
    run.extra["input"] = input;
    run.extra["input_sha256"] = sha256_hex(bytes);
    run_analysis(run, points, fs::path(input).filename().string(), bytes);
    run.finish();
}

void cmd_render(const std::string& input, std::string output) {
    if (output.empty()) output = fs::path(input).replace_extension(".svg").string();
    write_file(output, render_svg(parse_csv(read_file(input))));
}

void add_common(CLI::App* app, CommonOptions& options) {
    app->add_option("--config", options.config_path, "key-value config file");
    app->add_option("--preset", options.preset, "embedded preset (fig2, fig3a, fig3b, fig4a, fig4b)");
    app->add_option("--seed", options.seed, "random seed");
    app->add_option("--out", options.out, "output directory");
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Raman sideband cooling simulator and thermometry analysis", "rsc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RSC_VERSION);

    CommonOptions options;
    std::string input, output;

    auto* histogram = app.add_subcommand("detect-histogram", "photon-count histograms for F=3 and F=4 atoms");
    auto* spectrum = app.add_subcommand("spectrum", "Raman spectrum from simulated trials, plus analysis");
    auto* scan = app.add_subcommand("cooling-scan", "steady-state sideband ratio versus a cooling parameter");
    auto* analyze_cmd = app.add_subcommand("analyze", "thermometry from a spectrum CSV");
    auto* render = app.add_subcommand("render", "re-render the SVG for a CSV produced by this tool");
    for (auto* sub : {histogram, spectrum, scan, analyze_cmd}) add_common(sub, options);
    analyze_cmd->add_option("--input", input, "spectrum CSV")->required();
    render->add_option("--input", input, "CSV file")->required();
    render->add_option("--output", output, "SVG path (default: alongside the CSV)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ExitConfigError;
    }

    try {
        if (histogram->parsed()) cmd_detect_histogram(options);
        else if (spectrum->parsed()) cmd_spectrum(options);
        else if (scan->parsed()) cmd_cooling_scan(options);
        else if (analyze_cmd->parsed()) cmd_analyze(options, input);
        else if (render->parsed()) cmd_render(input, output);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitRuntimeError;
    }
    return ExitSuccess;
}

} // namespace rsc
