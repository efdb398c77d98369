#include "doctest.h"
#include "oracles.hpp"

#include "sdeid/rng.hpp"
#include "sdeid/stationary.hpp"

using namespace sdeid;

namespace {

LangevinModel quad(double s2) { return {make_named(NamedKind::Quadratic), s2}; }

double column_var(const SampleMatrix& x, int c) {
    const double m = x.col(c).mean();
    return (x.col(c).array() - m).square().sum() / static_cast<double>(x.rows() - 1);
}

} // namespace

TEST_SUITE("stationary") {

TEST_CASE("Gibbs log density") {
    CHECK(gibbs_log_density(quad(0.2), Eigen::Vector2d(1, 0)) == doctest::Approx(-10.0));
    CHECK(gibbs_log_density(quad(0.7), Eigen::Vector2d(0, 0)) == 0.0);
}

TEST_CASE("normalized Gibbs grid of the quadratic is the Gaussian with covariance sigma2/4") {
    for (double s2 : {0.2, 1.0}) {
        const auto g = gibbs_grid_density(quad(s2), 4.0, 201);
        CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-8));
        double vx = 0.0, cxy = 0.0;
        for (std::size_t k = 0; k < g.num_nodes(); ++k) {
            const Eigen::VectorXd x = g.node(k);
            vx += x[0] * x[0] * g.values[k] * g.cell_volume();
            cxy += x[0] * x[1] * g.values[k] * g.cell_volume();
        }
        CHECK(vx == doctest::Approx(oracle::quadratic_gibbs_variance(s2)).epsilon(1e-3));
        CHECK(std::abs(cxy) < 1e-12);
    }
}

TEST_CASE("Metropolis sampling of the Gibbs law") {
    const auto r = metropolis_sample(quad(0.2), 5000, 5000, 0.3, 1);
    const double n = 5000.0;
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_var(r.samples, c) - 0.05) <= 0.01);
        CHECK(std::abs(r.samples.col(c).mean()) <= 3 * std::sqrt(0.05 / n));
    }
    CHECK(r.warnings.empty());
    CHECK_THROWS_AS(metropolis_sample(quad(0.2), 10, 10, 0.0, 1), InputError);
    CHECK_FALSE(metropolis_sample(quad(0.2), 200, 200, 50.0, 1).warnings.empty());
    CHECK(metropolis_sample(quad(0.2), 100, 100, 0.3, 5).samples == metropolis_sample(quad(0.2), 100, 100, 0.3, 5).samples);

    const double scale = tune_proposal_scale(quad(0.2), 3);
    const auto tuned = metropolis_sample(quad(0.2), 2000, 500, scale, 2);
    CHECK(tuned.acceptance_rate == doctest::Approx(0.3).epsilon(0.35));
}

TEST_CASE("Langevin burn-in") {
    const auto init = sample_initial(UniformBox{2, 4.0}, 4000, 1);
    const auto out = langevin_burn_in(quad(0.2), init, 200, 0.01, 2);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_var(out, c) - 0.05) <= 0.01);
    }

    const LangevinModel boha{make_named(NamedKind::Bohachevsky), 0.2};
    const auto b = langevin_burn_in(boha, sample_initial(UniformBox{2, 4.0}, 1000, 3), 100, 0.01, 4);
    CHECK(b.allFinite());

    const auto gibbs = metropolis_sample(quad(0.2), 1000, 3000, 0.3, 5).samples;
    const auto kept = langevin_burn_in(quad(0.2), gibbs, 100, 0.001, 6);
    CHECK(energy_test(gibbs, kept, 200, 7).p_value > 0.05);
    CHECK_THROWS_AS(langevin_burn_in(quad(0.2), init, 0, 0.01, 1), InputError);
}

TEST_CASE("rescaled model") {
    const auto r = rescaled_model(quad(0.2), 5.0);
    CHECK(r.sigma2 == doctest::Approx(1.0));
    const Eigen::VectorXd x = Eigen::Vector2d(0.3, -1.2);
    CHECK(eval_potential(r.potential, x) == doctest::Approx(5.0 * x.squaredNorm()));
    CHECK(gibbs_log_density(r, x) == doctest::Approx(gibbs_log_density(quad(0.2), x)));
    const auto same = rescaled_model(quad(0.2), 1.0);
    CHECK(same.sigma2 == 0.2);
    CHECK((eval_gradient(same.potential, x) - eval_gradient(quad(0.2).potential, x)).norm() == 0.0);
    CHECK_THROWS_AS(rescaled_model(quad(0.2), 0.0), InputError);
    CHECK_THROWS_AS(rescaled_model(quad(0.2), -1.0), InputError);
}

TEST_CASE("Fokker-Planck residual of the Gibbs density converges") {
    const auto model = quad(0.2);
    const double r128 = fp_residual(model, gibbs_grid_density(model, 2.0, 128));
    const double r256 = fp_residual(model, gibbs_grid_density(model, 2.0, 256));
    CHECK(r128 <= 1e-3);
    CHECK(r256 <= 0.5 * r128);
    // the second-order stencil converges too, only more slowly
    const double s128 = fp_residual(model, gibbs_grid_density(model, 2.0, 128), StencilOrder::Second);
    const double s256 = fp_residual(model, gibbs_grid_density(model, 2.0, 256), StencilOrder::Second);
    CHECK(s256 <= 0.3 * s128);
}

TEST_CASE("Fokker-Planck residual of a uniform density") {
    const auto model = quad(0.2);
    const Eigen::VectorXd lo = Eigen::Vector2d(-2, -2), hi = Eigen::Vector2d(2, 2);
    const int res = 128;
    const auto flat = tabulate_density(lo, hi, res, [](const Eigen::VectorXd&) { return 1.0; });
    // constant p: the operator reduces to p * Laplacian(Psi) = 2 d p on the interior
    const double p = flat.values.front();
    const double h = flat.spacing(0);
    const int interior = res - 4;
    const double expected = 2 * 2 * p * std::sqrt(interior * interior * h * h);
    const double got = fp_residual(model, flat);
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
    CHECK(got > 10 * fp_residual(model, gibbs_grid_density(model, 2.0, res)));
}

TEST_CASE("Fokker-Planck operator is linear in the model") {
    const auto g = gibbs_grid_density(quad(0.3), 2.0, 64);
    PolynomialPotential st(1, 1);
    REQUIRE(as_polynomial(make_named(NamedKind::StyblinskiTang), &st));
    const PolynomialPotential q = make_named(NamedKind::Quadratic).to_polynomial();
    const auto a = fp_operator(st, 0.9, g);
    const auto b = fp_operator(q, 0.4, g);
    const auto c = fp_operator(st - q, 0.5, g);
    REQUIRE(a.size() == c.size());
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i] - c[i]));
        scale = std::max(scale, std::abs(a[i]));
    }
    CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("energy distance against the naive double sum") {
    const auto x = sample_initial(UniformBox{2, 1.0}, 60, 1);
    const auto y = sample_initial(Gaussian{Eigen::Vector2d(0.5, 0), Eigen::Matrix2d::Identity()}, 45, 2);
    CHECK(energy_distance(x, y) == doctest::Approx(oracle::energy_distance(x, y)).epsilon(1e-12));
    CHECK(energy_distance(x, x) == 0.0);
    CHECK(energy_test(x, x, 50, 1).statistic == 0.0);
    CHECK(energy_test(x, y, 50, 1).statistic == doctest::Approx(oracle::energy_distance(x, y)).epsilon(1e-10));
}

TEST_CASE("energy test is calibrated under the null") {
    int rejections = 0;
    const int repeats = 3000;
    for (int r = 0; r < repeats; ++r) {
        const auto x = sample_initial(UniformBox{2, 1.0}, 40, rng::derive_seed(1, r));
        const auto y = sample_initial(UniformBox{2, 1.0}, 40, rng::derive_seed(2, r));
        rejections += energy_test(x, y, 200, rng::derive_seed(3, r)).p_value < 0.05 ? 1 : 0;
    }
    CHECK(std::abs(rejections / static_cast<double>(repeats) - 0.05) <= 0.02);
}

TEST_CASE("energy test detects the early contraction of a uniform start") {
    const auto model = quad(0.2);
    const std::size_t n = 2000;
    const auto a = sample_initial(UniformBox{2, 4.0}, n, 1);
    const auto b0 = sample_initial(UniformBox{2, 4.0}, n, 2);
    const auto b = simulate(model, b0, {0.0, 0.05}, 3, {5, 1e6}).positions[1];
    CHECK(energy_test(a, b, 200, 4).p_value < 0.01);
}

TEST_CASE("stationarity test reports every consecutive pair") {
    const auto model = quad(0.2);
    const auto init = sample_initial(UniformBox{2, 4.0}, 200, 1);
    const auto s = shuffle_to_snapshots(simulate(model, init, uniform_times(0.1, 3), 2), 3);
    const auto rec = stationarity_test(s, 50, 1);
    REQUIRE(rec.size() == 3);
    CHECK(rec[1].t_i == doctest::Approx(0.1));
    CHECK(rec[1].t_j == doctest::Approx(0.2));
    for (const auto& r : rec) {
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
    }
    const auto tiny = shuffle_to_snapshots(simulate(model, sample_initial(UniformBox{2, 4.0}, 9, 1), {0.0, 0.1}, 2), 3);
    CHECK_THROWS_AS(stationarity_test(tiny), InputError);
}

} // TEST_SUITE
