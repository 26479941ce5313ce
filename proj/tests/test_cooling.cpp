#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rsc/cooling.hpp"
#include "rsc/errors.hpp"
#include "support.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace rsc;
using doctest::Approx;

namespace {

Eigen::MatrixXd dense_generator(const RateMatrix& g) {
    const auto dim = static_cast<Eigen::Index>(g.dimension());
    const auto values = g.dense();
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), dim,
                                                                                                    dim);
}

Eigen::VectorXd as_vector(const MotionalDistribution& p) {
    return Eigen::Map<const Eigen::VectorXd>(p.values().data(), static_cast<Eigen::Index>(p.size()));
}

// Stationary state from the null space of G with the normalization row appended.
Eigen::VectorXd null_space_state(const RateMatrix& g) {
    const Eigen::MatrixXd dense = dense_generator(g);
    const auto dim = dense.rows();
    Eigen::MatrixXd a(dim + 1, dim);
    a.topRows(dim) = dense;
    a.row(dim).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim + 1);
    b[dim] = 1.0;
    return a.colPivHouseholderQr().solve(b);
}

double mean_n(const Eigen::VectorXd& p, int n_max) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) s += static_cast<double>(i % (n_max + 1)) * p[i];
    return s;
}

CoolingConfig random_cooling(testing::Gen& g, int n_max) {
    CoolingConfig c;
    c.raman_detuning = -hz(g.uniform(300e3, 800e3));
    c.repump_intensity = g.log_uniform(0.05, 20.0);
    c.repump_detuning = hz(g.uniform(-20e6, 20e6));
    c.n_max = n_max;
    c.include_raise_sideband = g.coin();
    c.stimulated_return = g.coin();
    return c;
}

TrapConfig random_trap(testing::Gen& g) {
    TrapConfig t;
    t.spatial_phase = g.uniform(0.05, constants::pi / 2 - 0.05);
    t.base_rabi = hz(g.uniform(50e3, 400e3));
    return t;
}

} // namespace

TEST_CASE("repump rate and channel rate") {
    CoolingConfig c;
    c.repump_detuning = 0.0;
    c.repump_intensity = 1.0;
    CHECK(c.repump_rate() == Approx(c.pump_linewidth / 4));
    c.repump_intensity = 0.0;
    CHECK(c.repump_rate() == 0.0);
    CHECK(raman_channel_rate(0.0, 1.0, 1.0) == 0.0);
    CHECK(raman_channel_rate(2.0, 0.0, 4.0) == Approx(1.0));
    CHECK(raman_channel_rate(2.0, 1.0, 2.0) == Approx(4.0 * 2.0 / (4.0 + 4.0)));
    CHECK(default_recoil_lamb_dicke() == Approx(0.062439971761781995).epsilon(1e-9));
}

TEST_CASE("two-level steady state carries power broadening") {
    // F3 <-> F4 at forward rate R with stimulated return R, repump gamma:
    // P4 = R / (2R + gamma). With R = Omega^2 gamma / (gamma^2 + 4 Delta^2)
    // this is gamma Omega^2 / (gamma^2 + 2 Omega^2 + 4 Delta^2) divided by gamma.
    const double omega = 1.3, delta = 0.7, gamma = 2.1;
    const double r = raman_channel_rate(omega, delta, gamma);
    const double p4 = r / (2 * r + gamma);
    CHECK(gamma * p4 == Approx(gamma * omega * omega / (gamma * gamma + 2 * omega * omega + 4 * delta * delta)));
}

TEST_CASE("rate matrix columns conserve probability") {
    testing::for_all(60, 21, [](testing::Gen& g, int) {
        const auto trap = random_trap(g);
        const auto cooling = random_cooling(g, g.integer(5, 60));
        const auto gen = build_rate_matrix(trap, cooling);
        const double scale = gen.max_exit_rate();
        for (std::size_t j = 0; j < gen.dimension(); ++j) CHECK(std::abs(gen.column_sum(j)) <= 1e-12 * scale);
        for (std::size_t j = 0; j < gen.dimension(); ++j)
            for (const auto& e : gen.outgoing(j)) CHECK(e.rate > 0.0);
    });
}

TEST_CASE("exp(G dt) is stochastic and evolve matches the dense matrix exponential") {
    testing::for_all(12, 22, [](testing::Gen& g, int) {
        const auto trap = random_trap(g);
        const auto cooling = random_cooling(g, 12);
        const auto gen = build_rate_matrix(trap, cooling);
        const Eigen::MatrixXd dense = dense_generator(gen);
        const double dt = g.log_uniform(1e-7, 1e-3);
        const Eigen::MatrixXd m = (dense * dt).exp();
        CHECK(m.minCoeff() >= -1e-12);
        for (Eigen::Index j = 0; j < m.cols(); ++j) CHECK(std::abs(m.col(j).sum() - 1.0) < 1e-9);

        const auto start = thermal_distribution(g.uniform(0.1, 2.0), 12);
        const auto evolved = evolve(start, gen, dt);
        const Eigen::VectorXd expected = m * as_vector(start);
        CHECK((as_vector(evolved) - expected).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(evolved.is_normalized(1e-9));
    });
}

TEST_CASE("steady state agrees with the null-space solution") {
    testing::for_all(10, 23, [](testing::Gen& g, int) {
        const auto trap = random_trap(g);
        auto cooling = random_cooling(g, 30);
        const auto gen = build_rate_matrix(trap, cooling);
        const double nbar = steady_state_nbar(trap, cooling);
        const Eigen::VectorXd exact = null_space_state(gen);
        CHECK(nbar == Approx(mean_n(exact, 30)).epsilon(1e-3).scale(1e-4));
    });
}

TEST_CASE("default operating point cools below 0.05 and is converged") {
    const TrapConfig trap;
    const CoolingConfig cooling;
    const auto p = steady_state(trap, cooling);
    CHECK(p.mean_n() < 0.05);
    // Long-time oracle: one more doubling of the horizon leaves nbar in place.
    const auto gen = build_rate_matrix(trap, cooling);
    const auto later = evolve(p, gen, 0.05);
    const auto much_later = evolve(later, gen, 0.05);
    CHECK(std::abs(later.mean_n() - much_later.mean_n()) < 1e-4);
    CHECK(std::abs(p.mean_n() - later.mean_n()) < 1e-4);
}

TEST_CASE("no heating channel and no carrier: nbar is exactly zero") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.recoil_lamb_dicke = 0.0;
    cooling.carrier_scale = 0.0;
    cooling.include_raise_sideband = false;
    CHECK(steady_state_nbar(trap, cooling) == 0.0);
    CHECK(sideband_ratio_prediction(trap, cooling) == 0.0);
}

TEST_CASE("non-unique stationary state is an error") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.carrier_scale = 0.0;
    cooling.sideband_scale = 0.0;
    cooling.include_raise_sideband = false;
    CHECK_THROWS_AS(steady_state(trap, cooling), NumericalError);
}

TEST_CASE("Raman drive without repump is rejected") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.repump_intensity = 0.0;
    CHECK_THROWS_AS(build_rate_matrix(trap, cooling), DomainError);
    TrapConfig dark = trap;
    dark.base_rabi = 0.0;
    CHECK_NOTHROW(build_rate_matrix(dark, cooling));
}

TEST_CASE("recoil branching outside the Lamb-Dicke regime is rejected") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.recoil_lamb_dicke = 0.5;
    cooling.emission_geometry = 1.0;
    CHECK_THROWS_AS(build_rate_matrix(trap, cooling), DomainError);
}

TEST_CASE("truncation insensitivity") {
    const TrapConfig trap;
    CoolingConfig cooling;
    const double n40 = steady_state_nbar(trap, cooling);
    cooling.n_max = 80;
    const double n80 = steady_state_nbar(trap, cooling);
    CHECK(std::abs(n80 - n40) < 0.01 * n40);
}

TEST_CASE("nbar is continuous in the Raman detuning") {
    const TrapConfig trap;
    testing::for_all(8, 24, [&](testing::Gen& g, int) {
        CoolingConfig c;
        c.raman_detuning = -hz(g.uniform(400e3, 600e3));
        const double a = steady_state_nbar(trap, c);
        c.raman_detuning -= hz(1e3);
        const double b = steady_state_nbar(trap, c);
        CHECK(std::abs(a - b) < 0.02 * a);
    });
}

TEST_CASE("carrier-only drive heats monotonically") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.sideband_scale = 0.0;
    cooling.include_raise_sideband = true;
    const auto gen = build_rate_matrix(trap, cooling);
    auto p = thermal_distribution(0.2, cooling.n_max);
    double previous = p.mean_n();
    for (int k = 0; k < 10; ++k) {
        p = evolve(p, gen, 2e-4);
        CHECK(p.mean_n() > previous);
        previous = p.mean_n();
    }
}

TEST_CASE("Monte Carlo trajectories reproduce the master equation") {
    const TrapConfig trap;
    CoolingConfig cooling;
    cooling.n_max = 30;
    const auto gen = build_rate_matrix(trap, cooling);
    const auto start = thermal_distribution(1.0, cooling.n_max);
    for (const double t : {5e-5, 2e-4, 1e-3}) {
        const auto exact = evolve(start, gen, t);
        const auto mc = monte_carlo_cooling(gen, start, t, 10000, 99);
        CHECK(std::abs(mc.nbar - exact.mean_n()) < 3.0 * mc.nbar_error);
        const double p0 = exact.n_marginal()[0];
        CHECK(std::abs(mc.ground - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / 10000));
    }
}

TEST_CASE("evolve diagnostics") {
    const TrapConfig trap;
    const CoolingConfig cooling;
    const auto gen = build_rate_matrix(trap, cooling);
    const auto start = thermal_distribution(1.0, cooling.n_max);
    EvolveOptions strict;
    strict.min_step = 1.0;
    CHECK_THROWS_AS(evolve(start, gen, 1e-3, strict), NumericalError);
    EvolveStats stats;
    evolve(start, gen, 1e-3, {}, &stats);
    CHECK(stats.accepted > 0);
    CHECK(evolve(start, gen, 0.0).values() == start.values());
    CHECK_THROWS_AS(evolve(start, gen, -1.0), DomainError);
    CHECK_THROWS_AS(evolve(thermal_distribution(1.0, 5), gen, 1e-3), DomainError);
}

TEST_CASE("closed classes") {
    const TrapConfig trap;
    const CoolingConfig cooling;
    CHECK(closed_classes(build_rate_matrix(trap, cooling)).size() == 1);
    RateMatrix g(1);
    g.add(0, 1, 1.0);
    g.add(2, 3, 1.0);
    g.finalize();
    const auto classes = closed_classes(g);
    REQUIRE(classes.size() == 2);
    CHECK(classes[0] == std::vector<std::size_t>{1});
    CHECK(classes[1] == std::vector<std::size_t>{3});
}

TEST_CASE("cooling scan") {
    const TrapConfig trap;
    const CoolingConfig cooling;
    const std::vector<double> one{-525e3};
    const auto rows = cooling_scan(trap, cooling, ScanAxis::RamanDetuning, one);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].param_name == "delta_r_hz");
    CHECK(rows[0].nbar_inf == Approx(steady_state_nbar(trap, cooling)));
    CHECK(rows[0].r0 == Approx(rows[0].nbar_inf / (1 + rows[0].nbar_inf)));
    CHECK(parse_scan_axis("i4") == ScanAxis::RepumpIntensity);
    CHECK_THROWS_AS(parse_scan_axis("b_field"), DomainError);
}
