#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsc/analysis.hpp"
#include "rsc/errors.hpp"
#include "support.hpp"

#include <cmath>

using namespace rsc;
using doctest::Approx;

namespace {

struct Truth {
    double a, d0, w, b;
    double operator()(double d) const {
        const double h = w / 2;
        return a * h * h / ((d - d0) * (d - d0) + h * h) + b;
    }
};

std::vector<SpectrumPoint> noiseless(const Truth& t, double span, int count) {
    std::vector<SpectrumPoint> points;
    for (int i = 0; i < count; ++i) {
        SpectrumPoint p;
        p.detuning = -span + 2 * span * i / (count - 1);
        p.p4 = t(p.detuning);
        p.valid_trials = 100000;
        p.p4_error = std::sqrt(p.p4 * (1 - p.p4) / p.valid_trials);
        points.push_back(p);
    }
    return points;
}

std::vector<SpectrumPoint> binomial(const Truth& t, double span, int count, int trials, Rng& rng) {
    std::vector<SpectrumPoint> points;
    for (int i = 0; i < count; ++i) {
        const double d = -span + 2 * span * i / (count - 1);
        const int k = std::binomial_distribution<int>(trials, t(d))(rng);
        points.push_back(SpectrumPoint::from_counts(d, k, trials, 0));
    }
    return points;
}

SpectrumPoint point(double detuning, double p4, double err = 0.01) {
    SpectrumPoint p;
    p.detuning = detuning;
    p.p4 = p4;
    p.p4_error = err;
    p.valid_trials = 1000;
    return p;
}

} // namespace

TEST_CASE("noiseless Lorentzian is recovered exactly") {
    const Truth t{0.8, 0.0, hz(100e3), 0.02};
    const auto fit = fit_lorentzian(noiseless(t, hz(400e3), 41));
    CHECK(fit.converged);
    CHECK(fit.amplitude == Approx(t.a).epsilon(1e-6));
    CHECK(std::abs(fit.center - t.d0) < 1e-6 * t.w);
    CHECK(fit.fwhm == Approx(t.w).epsilon(1e-6));
    CHECK(fit.offset == Approx(t.b).epsilon(1e-6));
    CHECK(fit.residual_norm < 1e-6);
    CHECK(fit.iterations <= 200);
}

TEST_CASE("fit converges from the data-driven start on varied peaks") {
    testing::for_all(100, 51, [](testing::Gen& g, int) {
        const Truth t{g.uniform(0.1, 0.9), hz(g.uniform(-50e3, 50e3)), hz(g.uniform(50e3, 300e3)),
                      g.uniform(0.0, 0.05)};
        Rng rng = make_stream(g.integer(0, 1 << 30));
        const auto fit = fit_lorentzian(binomial(t, hz(500e3), 51, 299 * 33, rng));
        CHECK(fit.converged);
        CHECK(fit.fwhm > 0.0);
        CHECK(std::isfinite(fit.residual_norm));
        CHECK(fit.amplitude == Approx(t.a).epsilon(0.1));
    });
}

TEST_CASE("amplitude errors are calibrated under binomial noise") {
    const Truth t{0.8, 0.0, hz(100e3), 0.02};
    int outside = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_stream(1000 + seed);
        const auto fit = fit_lorentzian(binomial(t, hz(400e3), 41, 299, rng));
        outside += std::abs(fit.amplitude - t.a) > 3 * fit.errors[0];
    }
    CHECK(outside <= 2);
}

TEST_CASE("fit rescales with the detuning axis") {
    const Truth t{0.6, hz(10e3), hz(120e3), 0.03};
    Rng rng = make_stream(52);
    auto points = binomial(t, hz(400e3), 41, 2000, rng);
    const auto base = fit_lorentzian(points);
    testing::for_all(10, 53, [&](testing::Gen& g, int) {
        const double k = g.log_uniform(0.01, 100.0);
        auto scaled = points;
        for (auto& p : scaled) p.detuning *= k;
        const auto fit = fit_lorentzian(scaled);
        CHECK(fit.center == Approx(k * base.center).epsilon(1e-6).scale(k * base.fwhm));
        CHECK(fit.fwhm == Approx(k * base.fwhm).epsilon(1e-6));
        CHECK(fit.amplitude == Approx(base.amplitude).epsilon(1e-6));
        CHECK(fit.offset == Approx(base.offset).epsilon(1e-6));
    });
}

TEST_CASE("fit preconditions") {
    std::vector<SpectrumPoint> few{point(0, 0.1), point(1, 0.2), point(2, 0.1), point(3, 0.1)};
    CHECK_THROWS_AS(fit_lorentzian(few), DomainError);
    std::vector<SpectrumPoint> flat;
    for (int i = 0; i < 10; ++i) flat.push_back(point(i, 0.3));
    CHECK_THROWS_AS(fit_lorentzian(flat), DomainError);
}

TEST_CASE("background subtraction") {
    const std::vector<SpectrumPoint> points{point(-1, 0.1), point(0, 0.5), point(1, 0.01)};
    const auto constant = subtract_background(points, 0.024);
    CHECK(constant[0].p4 == Approx(0.076));
    CHECK(constant[2].p4 == Approx(-0.014)); // not clamped
    CHECK(constant[1].p4_error == points[1].p4_error);

    const Truth t{0.8, 0.0, hz(100e3), 0.02};
    Rng rng = make_stream(54);
    const auto noisy = binomial(t, hz(400e3), 41, 299 * 33, rng);
    const auto fit = fit_lorentzian(noisy);
    const auto residual = subtract_background(noisy, fit);
    double chi2 = 0.0;
    for (const auto& p : residual) chi2 += (p.p4 / p.p4_error) * (p.p4 / p.p4_error);
    CHECK(chi2 / (41 - 4) < 2.0);

    CHECK(parse_background_mode("raw") == BackgroundMode::Raw);
    CHECK(to_string(BackgroundMode::LorentzianSubtracted) == "lorentzian_subtracted");
    CHECK_THROWS_AS(parse_background_mode("median"), DomainError);
}

TEST_CASE("sideband ratio") {
    const double wa = hz(530e3), hw = hz(30e3);
    std::vector<SpectrumPoint> points;
    for (int k = -3; k <= 3; ++k) {
        points.push_back(point(-wa + hz(k * 10e3), 0.0));
        points.push_back(point(wa + hz(k * 10e3), 0.3));
    }
    const auto zero = sideband_ratio(points, wa, hw);
    CHECK(zero.r0 == 0.0);
    CHECK(zero.sigma == 0.0);
    CHECK(zero.pairs == 7);

    for (int k = 0; k < 7; ++k) points[2 * k].p4 = 0.03 + 0.01 * (k % 2);
    const auto r = sideband_ratio(points, wa, hw);
    const double red_mean = (4 * 0.03 + 3 * 0.04) / 7;
    CHECK(r.r0 == Approx(red_mean / 0.3));
    // Sample std of the pointwise ratios 0.1 (x4) and 0.1333 (x3).
    const double m = red_mean / 0.3;
    const double var = (4 * std::pow(0.1 - m, 2) + 3 * std::pow(0.04 / 0.3 - m, 2)) / 6;
    CHECK(r.sigma == Approx(std::sqrt(var)));

    for (auto& p : points)
        if (p.detuning > 0) p.p4 = 0.0;
    CHECK_THROWS_AS(sideband_ratio(points, wa, hw), NumericalError);
    CHECK_THROWS_AS(sideband_ratio(points, wa + hz(5e3), hz(1.0)), DomainError);
}

TEST_CASE("thermometry map") {
    const auto zero = infer_nbar(0.0, 0.0);
    CHECK(zero.nbar == 0.0);
    CHECK(zero.p0 == 1.0);
    const auto five = infer_nbar(0.05, 0.05);
    CHECK(five.nbar == Approx(0.05 / 0.95));
    CHECK(five.p0 == Approx(0.95));
    const auto ten = infer_nbar(0.10, 0.03);
    CHECK(ten.nbar == Approx(1.0 / 9.0));
    CHECK(std::abs(ten.nbar - 0.12) <= 0.04);
    CHECK(ten.p0 == Approx(0.90));
    CHECK_THROWS_AS(infer_nbar(1.0, 0.1), DomainError);
    CHECK_THROWS_AS(infer_nbar(1.3, 0.1), DomainError);

    testing::for_all(500, 55, [](testing::Gen& g, int) {
        const double r = g.uniform(0.0, 0.999);
        const double s = g.uniform(0.0, 0.1);
        const auto t = infer_nbar(r, s);
        CHECK(t.p0 == 1.0 - r);
        CHECK(t.nbar == Approx(r / (1 - r)).epsilon(1e-12));
        CHECK(t.p0 == Approx(1.0 / (t.nbar + 1.0)).epsilon(1e-12));
        CHECK(t.nbar_error == Approx(s / ((1 - r) * (1 - r))).epsilon(1e-12));
        CHECK(t.p0_error == s);
    });
}

TEST_CASE("symmetric spectrum gives r0 = 1 within 3 sigma") {
    SpectroscopyConfig c;
    c.trap.spatial_phase = 0.0; // carrier only
    c.trial.injected_nbar = 0.5;
    c.trial.residual_field = 0.0;
    c.trial.phase_mode = PhaseMode::Fixed;
    c.trial.atoms_per_point = 10;
    std::vector<double> mags;
    for (int k = -3; k <= 3; ++k) mags.push_back(c.trap.axial_frequency + hz(k * 10e3));
    const auto points = acquire_spectrum(mags, c, 56);
    const auto r = sideband_ratio(points, c.trap.axial_frequency, hz(30e3));
    CHECK(std::abs(r.r0 - 1.0) < 3 * r.sigma);
}

TEST_CASE("pipeline round trip at B = 0") {
    SpectroscopyConfig c;
    c.trial.residual_field = 0.0;
    c.trial.phase_mode = PhaseMode::Fixed;
    std::vector<double> mags;
    for (int k = -3; k <= 3; ++k) mags.push_back(c.trap.axial_frequency + hz(k * 10e3));
    for (const double nbar : {0.0, 0.05, 0.12, 0.5}) {
        c.trial.injected_nbar = nbar;
        const auto points = acquire_spectrum(mags, c, 57);
        const auto result = analyze(points, BackgroundMode::Raw);
        INFO("nbar = " << nbar << ", inferred " << result.thermometry.nbar << " +- " << result.thermometry.nbar_error);
        CHECK(std::abs(result.thermometry.nbar - nbar) < 3 * result.thermometry.nbar_error);
    }
}

TEST_CASE("subtraction modes are ordered when the carrier tail is positive") {
    SpectroscopyConfig c;
    c.trial.phase_mode = PhaseMode::Fixed;
    c.trial.injected_nbar = 0.12;
    std::vector<double> mags;
    for (int k = 0; k <= 22; ++k) mags.push_back(hz(k * 20e3));
    for (int k = -3; k <= 3; ++k) mags.push_back(c.trap.axial_frequency + hz(k * 10e3));
    const auto points = acquire_spectrum(mags, c, 58);
    const auto lor = analyze(points, BackgroundMode::LorentzianSubtracted);
    const auto constant = analyze(points, BackgroundMode::ConstantBackground);
    const auto raw = analyze(points, BackgroundMode::Raw);
    REQUIRE(lor.fit);
    CHECK((*lor.fit)(c.trap.axial_frequency) > 0.0);
    CHECK(lor.ratio.r0 <= constant.ratio.r0);
    CHECK(constant.ratio.r0 <= raw.ratio.r0);
    CHECK(raw.mode == BackgroundMode::Raw);
    CHECK(raw.window_halfwidth == hz(30e3));
    CHECK_FALSE(raw.fit);
}
