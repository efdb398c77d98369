#include "doctest.h"
#include "oracles.hpp"

#include "sdeid/metrics.hpp"
#include "sdeid/stationary.hpp"

using namespace sdeid;

namespace {

LangevinModel quad(double s2) { return {make_named(NamedKind::Quadratic), s2}; }

const Potential kQuad = make_named(NamedKind::Quadratic);

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("grid layout") {
    const auto g = grid_points(1.0, 3);
    REQUIRE(g.rows() == 9);
    CHECK(g.row(0) == Eigen::RowVector2d(-1, -1));
    CHECK(g.row(1) == Eigen::RowVector2d(-1, 0));
    CHECK(g.row(3) == Eigen::RowVector2d(0, -1));
    CHECK(g.row(8) == Eigen::RowVector2d(1, 1));
    CHECK(grid_points(4.0, 20).rows() == 400);
    CHECK(grid_points(2.0, 4, 3).rows() == 64);
}

TEST_CASE("relative drift error examples") {
    const auto pts = grid_points(4.0, 20);
    CHECK(drift_mae(kQuad, scale_potential(kQuad, 2.0), pts) == doctest::Approx(1.0));
    CHECK(drift_mae(kQuad, rescaled_model(quad(0.2), 5.0).potential, pts) == doctest::Approx(4.0));
    CHECK(drift_mae(kQuad, kQuad, pts) == 0.0);
    CHECK(diffusivity_mae(0.2, 0.27) == doctest::Approx(0.07));
    CHECK(diffusivity_mae(0.27, 0.2) == doctest::Approx(0.07));
}

TEST_CASE("drift error against a direct evaluation") {
    const auto pts = grid_points(3.0, 11);
    const Potential st = make_named(NamedKind::StyblinskiTang);
    double num = 0.0, den = 0.0, num1 = 0.0, den1 = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const Eigen::VectorXd x = pts.row(i).transpose();
        const Eigen::VectorXd gt = 2.0 * x;
        const Eigen::VectorXd ge = oracle::fd_gradient(oracle::styblinski_tang, x);
        num += (ge - gt).norm();
        den += gt.norm();
        num1 += (ge - gt).lpNorm<1>();
        den1 += gt.lpNorm<1>();
    }
    CHECK(drift_mae(kQuad, st, pts) == doctest::Approx(num / den).epsilon(1e-6));
    CHECK(drift_mae(kQuad, st, pts, {true}) == doctest::Approx(num1 / den1).epsilon(1e-6));
    CHECK(drift_mae(kQuad, st, pts, {true}) != doctest::Approx(drift_mae(kQuad, st, pts)));
}

TEST_CASE("cosine similarity") {
    const auto pts = grid_points(4.0, 21);
    const auto same = cosine_similarity(kQuad, scale_potential(kQuad, 3.0), pts);
    CHECK(same.mean == doctest::Approx(1.0));
    // the grid contains the origin where the quadratic gradient vanishes
    CHECK(same.skipped == 1);
    CHECK(same.used == 440);
    CHECK(cosine_similarity(kQuad, scale_potential(kQuad, -1.0), pts).mean == doctest::Approx(-1.0));
    SampleMatrix origin = SampleMatrix::Zero(1, 2);
    CHECK_THROWS_AS(cosine_similarity(kQuad, kQuad, origin), InputError);
}

TEST_CASE("metrics are invariant to a common rescaling") {
    const auto pts = grid_points(4.0, 20);
    const Potential st = make_named(NamedKind::StyblinskiTang);
    const Potential bo = make_named(NamedKind::Bohachevsky);
    const double base = drift_mae(st, bo, pts);
    CHECK(drift_mae(scale_potential(st, 7.0), scale_potential(bo, 7.0), pts) == doctest::Approx(base).epsilon(1e-12));
    CHECK(cosine_similarity(st, scale_potential(bo, 0.1), pts).mean ==
          doctest::Approx(cosine_similarity(st, bo, pts).mean).epsilon(1e-12));
}

TEST_CASE("vanishing true field is an error") {
    const auto pts = grid_points(4.0, 5);
    CHECK_THROWS_AS(drift_mae(PolynomialPotential(2, 1), kQuad, pts), InputError);
}

TEST_CASE("Gibbs evaluation points") {
    const auto g = gibbs_eval_points(quad(0.2), 4000, 1);
    REQUIRE(g.rows() == 4000);
    for (int c = 0; c < 2; ++c) {
        const double m = g.col(c).mean();
        const double v = (g.col(c).array() - m).square().sum() / 3999.0;
        CHECK(std::abs(v - oracle::quadratic_gibbs_variance(0.2)) <= 0.01);
    }
    const auto grid = grid_points(4.0, 20);
    double gmean = 0.0, pmean = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        pmean += oracle::quadratic(g.row(i).transpose()) / static_cast<double>(g.rows());
    }
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        gmean += oracle::quadratic(grid.row(i).transpose()) / static_cast<double>(grid.rows());
    }
    CHECK(pmean <= gmean);
    CHECK(gibbs_eval_points(quad(0.2), 100, 3) == gibbs_eval_points(quad(0.2), 100, 3));
}

} // TEST_SUITE
