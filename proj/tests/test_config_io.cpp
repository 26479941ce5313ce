#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsc/config.hpp"
#include "rsc/errors.hpp"
#include "rsc/io.hpp"
#include "support.hpp"

#include <charconv>
#include <cmath>

using namespace rsc;
using doctest::Approx;

TEST_CASE("defaults reproduce the library defaults") {
    const RunConfig rc = build_run_config(Config{});
    const TrapConfig trap;
    const CoolingConfig cooling;
    const TrialConfig trial;
    const DetectionConfig detection;
    CHECK(rc.trap.axial_frequency == Approx(trap.axial_frequency).epsilon(1e-15));
    CHECK(rc.trap.base_rabi == Approx(trap.base_rabi).epsilon(1e-15));
    CHECK(rc.trap.spatial_phase == trap.spatial_phase);
    CHECK(rc.trap.atom_mass == Approx(trap.atom_mass).epsilon(1e-15));
    CHECK(rc.cooling.raman_detuning == Approx(cooling.raman_detuning).epsilon(1e-15));
    CHECK(rc.cooling.repump_detuning == Approx(cooling.repump_detuning).epsilon(1e-15));
    CHECK(rc.cooling.recoil_lamb_dicke == Approx(cooling.recoil_lamb_dicke).epsilon(1e-15));
    CHECK(rc.cooling.emission_geometry == cooling.emission_geometry);
    CHECK(rc.cooling.n_max == cooling.n_max);
    CHECK(rc.trial.residual_field == Approx(trial.residual_field).epsilon(1e-15));
    CHECK(rc.trial.trials_per_sign == 299);
    CHECK(rc.trial.atoms_per_point == 33);
    CHECK(std::isinf(rc.trial.survival_lifetime));
    CHECK_FALSE(rc.trial.injected_nbar);
    CHECK(rc.detection.expected_counts == detection.expected_counts);
    CHECK(rc.analysis.window_halfwidth == Approx(hz(30e3)).epsilon(1e-15));
    CHECK(rc.spectrum_detunings_hz.size() == 71);
    CHECK(rc.scan_axis == ScanAxis::RamanDetuning);
}

TEST_CASE("config errors carry line and field") {
    Config c;
    try {
        c.merge_text("# comment\ntrap.axial_frequency_hz = 1e5\n\ntrap.bogus = 3\n");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 4);
        CHECK(e.field() == "trap.bogus");
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
    CHECK_THROWS_AS(c.merge_text("just words\n"), ConfigError);
    CHECK_THROWS_AS(c.merge_text("trap.base_rabi_hz =\n"), ConfigError);

    Config bad;
    bad.merge_text("\ncooling.n_max = forty\n");
    try {
        build_run_config(bad);
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "cooling.n_max");
        CHECK(e.line() == 2);
    }
    Config range;
    range.merge_text("trial.background = 2\n");
    CHECK_THROWS_AS(build_run_config(range), ConfigError);
    Config axis;
    axis.merge_text("scan.axis = b_field\n");
    CHECK_THROWS_AS(build_run_config(axis), ConfigError);
    CHECK_THROWS_AS(Config{}.merge_file("/nonexistent/rsc.conf"), ConfigError);
}

TEST_CASE("presets") {
    const auto& names = preset_names();
    for (const char* expected : {"fig2", "fig3a", "fig3b", "fig4a", "fig4b"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    for (const auto& name : names) {
        Config c;
        c.merge_text(preset_text(name));
        CHECK_NOTHROW(build_run_config(c));
    }
    Config a;
    a.merge_text(preset_text("fig3a"));
    const auto rc = build_run_config(a);
    CHECK(rc.trial.cool_duration == Approx(250e-6));
    CHECK(rc.cooling.repump_intensity == 5.0);
    Config b;
    b.merge_text(preset_text("fig4b"));
    CHECK(build_run_config(b).scan_axis == ScanAxis::RepumpIntensity);
    CHECK_THROWS_AS(preset_text("fig9"), ConfigError);
}

TEST_CASE("snapshot round trip") {
    Config c;
    c.merge_text(preset_text("fig3b"));
    c.merge_text("trial.injected_nbar = 0.05\ntrial.phase_mode = fixed\n");
    Config again;
    again.merge_text(c.snapshot());
    CHECK(again.snapshot() == c.snapshot());
    const auto a = build_run_config(c), b = build_run_config(again);
    CHECK(a.trial.injected_nbar == b.trial.injected_nbar);
    CHECK(a.spectrum_detunings_hz == b.spectrum_detunings_hz);
}

TEST_CASE("grids") {
    CHECK(parse_grid("1, 2.5,4") == std::vector<double>{1, 2.5, 4});
    CHECK(parse_grid("0:10:30") == std::vector<double>{0, 10, 20, 30});
    CHECK(parse_grid("-600:100:-400") == std::vector<double>{-600, -500, -400});
    CHECK(parse_grid("5:-5:-5") == std::vector<double>{5, 0, -5});
    const auto log = parse_grid("log:0.1:10:3");
    REQUIRE(log.size() == 3);
    CHECK(log[1] == Approx(1.0));
    CHECK(log[2] == Approx(10.0));
    CHECK(parse_grid("").empty());
    CHECK_THROWS_AS(parse_grid("0:-1:10"), DomainError);
    CHECK_THROWS_AS(parse_grid("1,x"), DomainError);
    CHECK_THROWS_AS(parse_grid("log:0:1:3"), DomainError);
}

TEST_CASE("numbers round-trip through text") {
    testing::for_all(2000, 61, [](testing::Gen& g, int) {
        const double v = (g.coin() ? -1 : 1) * g.log_uniform(1e-300, 1e300);
        const std::string s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    });
    CHECK(format_number(-600000.0) == "-600000");
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(0.0) == "0");
}

TEST_CASE("CSV tables") {
    std::vector<SpectrumPoint> points{SpectrumPoint::from_counts(-hz(530e3), 12, 900, 40),
                                      SpectrumPoint::from_counts(0.0, 400, 1800, 80),
                                      SpectrumPoint::from_counts(hz(530e3), 90, 910, 30)};
    CsvTable table = spectrum_table(points);
    table.metadata.emplace_back("manifest", "manifest.json");
    const std::string text = write_csv(table);
    CHECK(text.rfind("# manifest: manifest.json\ndelta_r_hz,p4,p4_err,transfers,valid_trials,inconclusive\n", 0) == 0);
    const auto parsed = parse_csv(text);
    CHECK(parsed.meta("manifest") == "manifest.json");
    CHECK(parsed.rows.size() == 3);
    CHECK(parsed.rows[0][0] == "-530000");
    const auto back = spectrum_from_table(parsed);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].detuning == Approx(points[i].detuning).epsilon(1e-15));
        CHECK(back[i].transfers == points[i].transfers);
        CHECK(back[i].p4 == points[i].p4);
        CHECK(back[i].inconclusive == points[i].inconclusive);
    }
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DomainError);
    CHECK_THROWS_AS(parse_csv("# only: meta\n"), DomainError);
    CHECK_THROWS_AS(parsed.column("missing"), DomainError);

    // p4 columns alone are enough for external data.
    const auto external = spectrum_from_table(parse_csv("delta_r_hz,p4,p4_err\n-1000,0.1,0.01\n"));
    CHECK(external[0].p4 == 0.1);
    CHECK(external[0].p4_error == 0.01);
}

TEST_CASE("SVG rendering is a pure function of the table") {
    DetectionConfig d;
    const auto rows = count_histogram(d, 2000, 3);
    CsvTable t = histogram_table(rows, d);
    CHECK(t.meta("lower_threshold_counts") == "7.5");
    CHECK(t.meta("upper_threshold_counts") == "22.5");
    const std::string svg = render_svg(t);
    CHECK(svg == render_svg(parse_csv(write_csv(t))));
    std::size_t dashed = 0;
    for (std::size_t pos = 0; (pos = svg.find("stroke-dasharray", pos)) != std::string::npos; ++pos) ++dashed;
    CHECK(dashed == 2);
    CHECK(svg.rfind("<?xml", 0) == 0);

    const std::vector<ScanRow> scan{{"i4_isat", 0.1, 0.01, 0.0099}, {"i4_isat", 1.0, 0.02, 0.0196}};
    CHECK(render_svg(scan_table(scan)).find("log10") != std::string::npos);
    CsvTable unknown;
    unknown.columns = {"x", "y"};
    CHECK_THROWS_AS(render_svg(unknown), DomainError);
}

TEST_CASE("SHA-256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
