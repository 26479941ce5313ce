#include "rsc/analysis.hpp"

#include "rsc/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsc {

double LorentzianFit::operator()(double detuning) const {
    const double h = 0.5 * fwhm;
    const double u = detuning - center;
    return amplitude * h * h / (u * u + h * h) + offset;
}

namespace {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

struct Model {
    std::vector<double> x, y, inv_sigma;

    double cost(const Vec4& p, Eigen::VectorXd* residual = nullptr) const {
        const LorentzianFit f{p[0], p[1], p[2], p[3]};
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = (y[i] - f(x[i])) * inv_sigma[i];
            if (residual) (*residual)[static_cast<Eigen::Index>(i)] = r;
            s += r * r;
        }
        return s;
    }

    // Jacobian of the weighted model values.
    Eigen::MatrixXd jacobian(const Vec4& p) const {
        Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), 4);
        const double a = p[0], h = 0.5 * p[2];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double u = x[i] - p[1];
            const double d = u * u + h * h;
            const auto row = static_cast<Eigen::Index>(i);
            j(row, 0) = h * h / d;
            j(row, 1) = 2.0 * a * h * h * u / (d * d);
            j(row, 2) = a * h * u * u / (d * d);
            j(row, 3) = 1.0;
            j.row(row) *= inv_sigma[i];
        }
        return j;
    }
};

Vec4 initial_guess(const Model& m) {
    const auto [lo, hi] = std::minmax_element(m.y.begin(), m.y.end());
    const std::size_t peak = static_cast<std::size_t>(hi - m.y.begin());
    const double base = *lo;
    const double amp = *hi - base;
    const double half = base + 0.5 * amp;
    double left = m.x[peak], right = m.x[peak];
    for (std::size_t i = 0; i < m.x.size(); ++i) {
        if (m.y[i] >= half) {
            left = std::min(left, m.x[i]);
            right = std::max(right, m.x[i]);
        }
    }
    const auto [xmin, xmax] = std::minmax_element(m.x.begin(), m.x.end());
    double width = right - left;
    if (!(width > 0.0)) width = (*xmax - *xmin) / static_cast<double>(m.x.size());
    return {amp, m.x[peak], width, base};
}

} // namespace

LorentzianFit fit_lorentzian(std::span<const SpectrumPoint> points, const FitOptions& options) {
    if (points.size() < 5) throw DomainError("Lorentzian fit needs at least 5 points");
    Model m;
    for (const auto& p : points) {
        m.x.push_back(p.detuning);
        m.y.push_back(p.p4);
        const double floor = p.valid_trials > 0 ? 1.0 / p.valid_trials : 1.0;
        m.inv_sigma.push_back(1.0 / std::max(p.p4_error, floor));
    }
    const auto [lo, hi] = std::minmax_element(m.y.begin(), m.y.end());
    if (*hi == *lo) throw DomainError("degenerate data: all p4 values equal");
    {
        std::vector<double> xs = m.x;
        std::sort(xs.begin(), xs.end());
        if (std::unique(xs.begin(), xs.end()) - xs.begin() < 4)
            throw DomainError("degenerate data: fewer than four distinct detunings");
    }

    Vec4 p = initial_guess(m);
    double cost = m.cost(p);
    double lambda = options.initial_damping;
    LorentzianFit fit;
    Eigen::VectorXd r(static_cast<Eigen::Index>(m.x.size()));

    for (fit.iterations = 0; fit.iterations < options.max_iterations;) {
        ++fit.iterations;
        m.cost(p, &r);
        const Eigen::MatrixXd j = m.jacobian(p);
        const Mat4 jtj = j.transpose() * j;
        const Vec4 g = j.transpose() * r;
        Mat4 a = jtj;
        for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), std::numeric_limits<double>::min());
        const Vec4 step = a.ldlt().solve(g);
        if (!step.allFinite()) break;

        // Natural scale per parameter: the center is measured against the width.
        const std::array<double, 4> scale{std::abs(p[0]), std::abs(p[2]), std::abs(p[2]), std::abs(p[3])};
        bool small = true;
        for (int k = 0; k < 4; ++k)
            if (std::abs(step[k]) > options.relative_step * std::max(scale[k], std::abs(p[k]) + 1e-300)) small = false;

        const Vec4 trial = p + step;
        const double trial_cost = m.cost(trial);
        if (std::isfinite(trial_cost) && trial_cost <= cost) {
            p = trial;
            cost = trial_cost;
            lambda /= 10.0;
            if (small || cost == 0.0) {
                fit.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (small || lambda > 1e20) {
                fit.converged = small;
                break;
            }
        }
    }

    fit.amplitude = p[0];
    fit.center = p[1];
    fit.fwhm = std::abs(p[2]);
    fit.offset = p[3];
    fit.residual_norm = std::sqrt(cost);
    const Mat4 jtj = m.jacobian(p).transpose() * m.jacobian(p);
    Eigen::FullPivLU<Mat4> lu(jtj);
    if (lu.isInvertible()) {
        const Mat4 cov = lu.inverse();
        for (int k = 0; k < 4; ++k) fit.errors[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, cov(k, k)));
    }
    if (!(fit.fwhm > 0.0) || !std::isfinite(fit.residual_norm)) fit.converged = false;
    return fit;
}

BackgroundMode parse_background_mode(const std::string& name) {
    if (name == "lorentzian_subtracted") return BackgroundMode::LorentzianSubtracted;
    if (name == "constant_background") return BackgroundMode::ConstantBackground;
    if (name == "raw") return BackgroundMode::Raw;
    throw DomainError("unknown background mode '" + name + "'");
}

std::string to_string(BackgroundMode mode) {
    switch (mode) {
    case BackgroundMode::LorentzianSubtracted: return "lorentzian_subtracted";
    case BackgroundMode::ConstantBackground: return "constant_background";
    case BackgroundMode::Raw: return "raw";
    }
    return "?";
}

std::vector<SpectrumPoint> subtract_background(std::span<const SpectrumPoint> points, const LorentzianFit& fit) {
    std::vector<SpectrumPoint> out(points.begin(), points.end());
    for (auto& p : out) p.p4 -= fit(p.detuning);
    return out;
}

std::vector<SpectrumPoint> subtract_background(std::span<const SpectrumPoint> points, double constant) {
    std::vector<SpectrumPoint> out(points.begin(), points.end());
    for (auto& p : out) p.p4 -= constant;
    return out;
}

SidebandRatio sideband_ratio(std::span<const SpectrumPoint> points, double axial_frequency, double window_halfwidth) {
    if (!(window_halfwidth >= 0.0)) throw DomainError("window half-width must be non-negative");
    // Slack keeps grid points on the window edge despite Hz to rad/s round-off.
    const double slack = 1e-9 * (std::abs(axial_frequency) + window_halfwidth);
    auto in_window = [&](double d) { return std::abs(d - axial_frequency) <= window_halfwidth + slack; };

    double red_sum = 0.0, blue_sum = 0.0;
    int red_count = 0, blue_count = 0;
    for (const auto& p : points) {
        if (in_window(-p.detuning)) {
            red_sum += p.p4;
            ++red_count;
        }
        if (in_window(p.detuning)) {
            blue_sum += p.p4;
            ++blue_count;
        }
    }
    if (red_count == 0 || blue_count == 0)
        throw DomainError("sideband window must contain points on both signs");

    SidebandRatio out;
    out.red_mean = red_sum / red_count;
    out.blue_mean = blue_sum / blue_count;
    if (!(out.blue_mean > 0.0)) throw NumericalError("sideband ratio undefined: blue-sideband mean is not positive");
    out.r0 = out.red_mean / out.blue_mean;

    std::vector<double> ratios;
    for (const auto& red : points) {
        if (!in_window(-red.detuning)) continue;
        for (const auto& blue : points) {
            if (blue.detuning != -red.detuning || blue.p4 <= 0.0) continue;
            ratios.push_back(red.p4 / blue.p4);
            break;
        }
    }
    out.pairs = static_cast<int>(ratios.size());
    if (ratios.size() >= 2) {
        double mean = 0.0;
        for (double v : ratios) mean += v;
        mean /= static_cast<double>(ratios.size());
        double var = 0.0;
        for (double v : ratios) var += (v - mean) * (v - mean);
        out.sigma = std::sqrt(var / static_cast<double>(ratios.size() - 1));
    }
    return out;
}

Thermometry infer_nbar(double r0, double sigma_r) {
    if (!(r0 < 1.0)) throw DomainError("r0 >= 1: thermal inference invalid");
    Thermometry t;
    t.nbar = r0 / (1.0 - r0);
    t.nbar_error = sigma_r / ((1.0 - r0) * (1.0 - r0));
    t.p0 = 1.0 - r0;
    t.p0_error = sigma_r;
    return t;
}

std::vector<SpectrumPoint> carrier_region(std::span<const SpectrumPoint> points, double halfwidth) {
    std::vector<SpectrumPoint> out;
    for (const auto& p : points)
        if (std::abs(p.detuning) <= halfwidth * (1 + 1e-12)) out.push_back(p);
    return out;
}

AnalysisResult analyze(std::span<const SpectrumPoint> points, BackgroundMode mode, const AnalysisConfig& config) {
    AnalysisResult result;
    result.mode = mode;
    result.window_halfwidth = config.window_halfwidth;
    std::vector<SpectrumPoint> corrected;
    switch (mode) {
    case BackgroundMode::Raw: corrected.assign(points.begin(), points.end()); break;
    case BackgroundMode::ConstantBackground: corrected = subtract_background(points, config.background); break;
    case BackgroundMode::LorentzianSubtracted: {
        const auto carrier = carrier_region(points, config.carrier_halfwidth);
        result.fit = fit_lorentzian(carrier);
        corrected = subtract_background(points, *result.fit);
        break;
    }
    }
    result.ratio = sideband_ratio(corrected, config.axial_frequency, config.window_halfwidth);
    result.thermometry = infer_nbar(result.ratio.r0, result.ratio.sigma);
    return result;
}

} // namespace rsc
