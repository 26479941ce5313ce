#pragma once

#include "rsc/spectroscopy.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rsc {

struct LorentzianFit {
    double amplitude = 0.0; // A
    double center = 0.0;    // delta_0, rad/s
    double fwhm = 0.0;      // w, rad/s
    double offset = 0.0;    // B
    std::array<double, 4> errors{}; // 1 sigma for (A, delta_0, w, B)
    double residual_norm = 0.0;     // sqrt of the weighted sum of squares
    bool converged = false;
    int iterations = 0;

    double operator()(double detuning) const;
};

struct FitOptions {
    double relative_step = 1e-8;
    int max_iterations = 200;
    double initial_damping = 1e-3;
};

// Weighted Levenberg-Marquardt fit of A (w/2)^2 / ((d - d0)^2 + (w/2)^2) + B.
// Weights are 1 / max(p4_error, 1 / valid_trials)^2.
LorentzianFit fit_lorentzian(std::span<const SpectrumPoint> points, const FitOptions& options = {});

enum class BackgroundMode { LorentzianSubtracted, ConstantBackground, Raw };

BackgroundMode parse_background_mode(const std::string& name);
std::string to_string(BackgroundMode mode);

// p4 <- p4 - model(delta). Values are not clamped at zero.
std::vector<SpectrumPoint> subtract_background(std::span<const SpectrumPoint> points, const LorentzianFit& fit);
std::vector<SpectrumPoint> subtract_background(std::span<const SpectrumPoint> points, double constant);

struct SidebandRatio {
    double r0 = 0.0;
    double sigma = 0.0;
    double red_mean = 0.0;
    double blue_mean = 0.0;
    int pairs = 0; // +/- detuning pairs used for the scatter
};

// Red side is -omega_a, blue side +omega_a. r0 is a ratio of window means;
// sigma is the sample standard deviation of the pointwise ratios.
SidebandRatio sideband_ratio(std::span<const SpectrumPoint> points, double axial_frequency, double window_halfwidth);

struct Thermometry {
    double nbar = 0.0;
    double nbar_error = 0.0;
    double p0 = 0.0;
    double p0_error = 0.0;
};

Thermometry infer_nbar(double r0, double sigma_r);

struct AnalysisConfig {
    double axial_frequency = hz(530e3);
    double window_halfwidth = hz(30e3);
    double background = 0.024;
    // Points with |delta| below this enter the carrier fit.
    double carrier_halfwidth = hz(400e3);
};

struct AnalysisResult {
    BackgroundMode mode = BackgroundMode::Raw;
    SidebandRatio ratio;
    Thermometry thermometry;
    double window_halfwidth = 0.0;
    std::optional<LorentzianFit> fit;
};

std::vector<SpectrumPoint> carrier_region(std::span<const SpectrumPoint> points, double halfwidth);

AnalysisResult analyze(std::span<const SpectrumPoint> points, BackgroundMode mode, const AnalysisConfig& config = {});

} // namespace rsc
