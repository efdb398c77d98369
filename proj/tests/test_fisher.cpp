#include "doctest.h"
#include "oracles.hpp"

#include "sdeid/estimate.hpp"
#include "sdeid/fisher.hpp"
#include "sdeid/rng.hpp"

using namespace sdeid;

namespace {

LangevinModel quad(double s2) { return {make_named(NamedKind::Quadratic), s2}; }

// Drift score of the x^(2,0) coefficient and the diffusion score, from their definitions.
struct Scores {
    Eigen::VectorXd drift;
    Eigen::VectorXd diffusion;
};

Scores oracle_scores(const TrajectorySet& t, double s2) {
    const auto& a = t.positions[0];
    const auto& b = t.positions[1];
    const double dt = t.times[1] - t.times[0];
    Scores s{Eigen::VectorXd(a.rows()), Eigen::VectorXd(a.rows())};
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double rx = b(i, 0) - a(i, 0) + dt * 2 * a(i, 0);
        const double ry = b(i, 1) - a(i, 1) + dt * 2 * a(i, 1);
        s.drift[i] = -(rx * 2 * a(i, 0)) / s2;
        s.diffusion[i] = -2.0 / (2 * s2) + (rx * rx + ry * ry) / (2 * s2 * s2 * dt);
    }
    return s;
}

double sample_variance(const Eigen::VectorXd& v) {
    return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_SUITE("fisher") {

TEST_CASE("closed-form information values") {
    const auto init = sample_initial(UniformBox{2, 1.0}, 200000, 1);
    const auto drift = drift_fisher_theoretical(quad(0.2), init, 1.0, 2);
    const double n = static_cast<double>(init.rows());
    const double ex2 = init.col(0).array().square().mean();
    CHECK(drift.at(MultiIndex({2, 0})) / n == doctest::Approx(4 * ex2 / 0.2).epsilon(1e-12));
    CHECK(drift.at(MultiIndex({2, 0})) / n == doctest::Approx(4 * oracle::uniform_second_moment(1.0) / 0.2).epsilon(0.01));
    CHECK(drift.at(MultiIndex({1, 0})) / n == doctest::Approx(1 / 0.2));
    const double ey2 = init.col(1).array().square().mean();
    CHECK(drift.at(MultiIndex({1, 1})) / n == doctest::Approx((ey2 + ex2) / 0.2).epsilon(1e-12));
    CHECK(drift.size() == 5);

    CHECK(diffusion_fisher_theoretical(2, 0.2, 1000) == doctest::Approx(25000.0));
    CHECK(diffusion_fisher_theoretical(1, 1.0, 1) == doctest::Approx(0.5));
}

TEST_CASE("drift information scales with the sample count and the step") {
    const auto init = sample_initial(UniformBox{2, 1.0}, 500, 2);
    SampleMatrix twice(1000, 2);
    twice << init, init;
    const auto a = drift_fisher_theoretical(quad(0.2), init, 0.01, 2);
    const auto b = drift_fisher_theoretical(quad(0.2), twice, 0.01, 2);
    const auto c = drift_fisher_theoretical(quad(0.2), init, 0.03, 2);
    for (const auto& [alpha, v] : a) {
        CHECK(b.at(alpha) == doctest::Approx(2 * v).epsilon(1e-12));
        CHECK(c.at(alpha) == doctest::Approx(3 * v).epsilon(1e-12));
    }
}

TEST_CASE("empirical score variance against hand-computed scores") {
    const auto model = quad(0.2);
    const auto init = sample_initial(UniformBox{2, 1.0}, 100000, 3);
    const auto trajs = simulate(model, init, {0.0, 0.001}, 4);
    const auto rep = empirical_score_variance(model, trajs, 2);
    const auto s = oracle_scores(trajs, 0.2);
    const double n = 100000.0;

    // scores have mean zero under the generating model
    CHECK(std::abs(s.drift.mean()) <= 4 * std::sqrt(sample_variance(s.drift) / n));
    CHECK(std::abs(s.diffusion.mean()) <= 4 * std::sqrt(sample_variance(s.diffusion) / n));

    const auto& e20 = rep.per_coefficient.at(MultiIndex({2, 0}));
    CHECK(e20.empirical == doctest::Approx(n * sample_variance(s.drift)).epsilon(1e-9));
    CHECK(rep.diffusion.empirical == doctest::Approx(n * sample_variance(s.diffusion)).epsilon(1e-9));

    CHECK(std::abs(e20.empirical - e20.theoretical) <= 0.05 * e20.theoretical + 3 * e20.stderr);
    CHECK(std::abs(rep.diffusion.empirical - rep.diffusion.theoretical) <= 0.05 * rep.diffusion.theoretical);
    CHECK(rep.diffusion.theoretical == doctest::Approx(diffusion_fisher_theoretical(2, 0.2, 100000)));
    for (const auto& [alpha, e] : rep.per_coefficient) {
        CHECK(std::abs(e.empirical - e.theoretical) <= 0.05 * e.theoretical + 3 * e.stderr);
    }
    CHECK(rep.n == 100000);
    CHECK(rep.dt == doctest::Approx(0.001));
}

TEST_CASE("empirical drift information grows linearly in the step") {
    const auto model = quad(0.2);
    const auto init = sample_initial(UniformBox{2, 1.0}, 50000, 5);
    std::vector<double> ldt, linfo;
    for (double dt : {0.001, 0.002, 0.004, 0.008}) {
        const auto rep = empirical_score_variance(model, simulate(model, init, {0.0, dt}, 6), 2);
        ldt.push_back(std::log(dt));
        linfo.push_back(std::log(rep.per_coefficient.at(MultiIndex({2, 0})).empirical));
    }
    CHECK(std::abs(oracle::slope(ldt, linfo) - 1.0) <= 0.1);
}

TEST_CASE("jackknife variance") {
    Eigen::VectorXd v(5);
    v << 1, 2, 4, 7, 11;
    const auto [var, se] = variance_with_jackknife(v);
    CHECK(var == doctest::Approx(sample_variance(v)));
    Eigen::VectorXd loo(5);
    for (int i = 0; i < 5; ++i) {
        Eigen::VectorXd w(4);
        for (int j = 0, k = 0; j < 5; ++j) {
            if (j != i) {
                w[k++] = v[j];
            }
        }
        loo[i] = sample_variance(w);
    }
    const double jk = std::sqrt(4.0 / 5.0 * (loo.array() - loo.mean()).square().sum());
    CHECK(se == doctest::Approx(jk));
}

TEST_CASE("information gap vanishes when the pairing is known") {
    const auto model = quad(0.2);
    const auto trajs = simulate(model, sample_initial(UniformBox{2, 1.0}, 300, 7), {0.0, 0.01}, 8);
    std::vector<std::size_t> id(300);
    std::iota(id.begin(), id.end(), 0);
    const auto gap = information_gap_estimate(model, trajs, permutation_coupling(id), 50, 9, 2);
    CHECK(gap.diffusion.empirical == 0.0);
    for (const auto& [alpha, e] : gap.per_coefficient) {
        CHECK(e.empirical == 0.0);
    }
    CHECK(gap.resamples == 50);
}

TEST_CASE("information gap vanishes from a single starting point") {
    const auto model = quad(0.2);
    const auto trajs = simulate(model, sample_initial(Dirac{Eigen::Vector2d(0.5, -0.3)}, 300, 1), {0.0, 0.01}, 10);
    const auto c = sinkhorn_coupling(trajs.positions[0], trajs.positions[1], model, 0.01);
    const auto gap = information_gap_estimate(model, trajs, c, 50, 11, 2);
    const auto rep = empirical_score_variance(model, trajs, 2);
    CHECK(gap.diffusion.empirical <= 1e-12 * rep.diffusion.theoretical);
    for (const auto& [alpha, e] : gap.per_coefficient) {
        CHECK(e.empirical <= 1e-12 * rep.diffusion.theoretical);
    }
}

TEST_CASE("information gap is positive for spread starts") {
    const auto model = quad(0.2);
    const auto trajs = simulate(model, sample_initial(UniformBox{2, 1.0}, 300, 12), {0.0, 0.01}, 13);
    const auto c = sinkhorn_coupling(trajs.positions[0], trajs.positions[1], model, 0.01);
    const auto gap = information_gap_estimate(model, trajs, c, 50, 14, 2);
    CHECK(gap.diffusion.empirical > 0.0);
    CHECK(gap.per_coefficient.at(MultiIndex({2, 0})).empirical > 0.0);
    CHECK_THROWS_AS(information_gap_estimate(model, trajs, c, 1, 14, 2), InputError);
}

} // TEST_SUITE
