#include "doctest.h"
#include "oracles.hpp"

#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"
#include "sdeid/sim.hpp"

#include <set>

using namespace sdeid;

namespace {

LangevinModel quad(double s2) { return {make_named(NamedKind::Quadratic), s2}; }

// Psi = |x|^2 / 2, so grad Psi = x
LangevinModel ou(double s2, int d = 2) {
    std::map<MultiIndex, double> c;
    for (int i = 0; i < d; ++i) {
        std::vector<int> e(static_cast<std::size_t>(d), 0);
        e[static_cast<std::size_t>(i)] = 2;
        c[MultiIndex(e)] = 0.5;
    }
    return {PolynomialPotential(d, 2, c), s2};
}

double column_mean(const SampleMatrix& x, int c) { return x.col(c).mean(); }

double column_var(const SampleMatrix& x, int c) {
    const double m = x.col(c).mean();
    return (x.col(c).array() - m).square().sum() / static_cast<double>(x.rows() - 1);
}

std::multiset<std::pair<double, double>> rows_of(const SampleMatrix& x) {
    std::multiset<std::pair<double, double>> s;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        s.insert({x(i, 0), x(i, 1)});
    }
    return s;
}

} // namespace

TEST_SUITE("sim") {

TEST_CASE("rng streams are reproducible and well spread") {
    CHECK(rng::normal_at(4, rng::Domain::Increment, 7, 9, 1) == rng::normal_at(4, rng::Domain::Increment, 7, 9, 1));
    CHECK(rng::normal_at(4, rng::Domain::Increment, 7, 9, 1) != rng::normal_at(4, rng::Domain::Initial, 7, 9, 1));
    CHECK(rng::derive_seed(1, 0) != rng::derive_seed(1, 1));
    rng::Stream s(1, rng::Domain::Derive, 0);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.015);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        ++counts[s.below(7)];
    }
    for (int c : counts) {
        CHECK(std::abs(c - 10000) < 400);
    }
}

TEST_CASE("initial distributions") {
    const auto dirac = sample_initial(Dirac{Eigen::Vector2d(1, -1)}, 3, 1);
    REQUIRE(dirac.rows() == 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(dirac(i, 0) == 1.0);
        CHECK(dirac(i, 1) == -1.0);
    }

    const auto u = sample_initial(UniformBox{2, 4.0}, 100000, 2);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_mean(u, c)) <= 0.05);
        CHECK(std::abs(column_var(u, c) - oracle::uniform_second_moment(4.0)) <= 0.2);
        CHECK(u.col(c).cwiseAbs().maxCoeff() <= 4.0);
    }

    const auto r = sample_initial(Rademacher{2, 2.0}, 10000, 3);
    std::map<std::pair<double, double>, int> freq;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        ++freq[{r(i, 0), r(i, 1)}];
    }
    CHECK(freq.size() == 4);
    for (const auto& [pt, count] : freq) {
        CHECK(std::abs(std::abs(pt.first) - 2.0) == 0.0);
        CHECK(std::abs(count / 10000.0 - 0.25) <= 0.02);
    }

    Eigen::Matrix2d cov;
    cov << 2.0, 0.5, 0.5, 1.0;
    const auto g = sample_initial(Gaussian{Eigen::Vector2d(1, -2), cov}, 100000, 4);
    CHECK(column_mean(g, 0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(column_var(g, 0) == doctest::Approx(2.0).epsilon(0.03));
    const double cxy = ((g.col(0).array() - g.col(0).mean()) * (g.col(1).array() - g.col(1).mean())).mean();
    CHECK(cxy == doctest::Approx(0.5).epsilon(0.05));

    cov << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(sample_initial(Gaussian{Eigen::Vector2d(0, 0), cov}, 10, 1), InputError);
    CHECK_THROWS_AS(sample_initial(UniformBox{2, -1.0}, 10, 1), InputError);
    CHECK(sample_initial(UniformBox{2, 4.0}, 50, 9) == sample_initial(UniformBox{2, 4.0}, 50, 9));
}

TEST_CASE("Euler-Maruyama step") {
    const Eigen::VectorXd x = Eigen::Vector2d(1, 0);
    const Eigen::VectorXd z = Eigen::Vector2d::Zero();
    const auto y = euler_maruyama_step(quad(5.0), x, 0.1, z);
    CHECK(y[0] == doctest::Approx(0.8));
    CHECK(y[1] == 0.0);

    const LangevinModel flat{PolynomialPotential(2, 1), 1.0};
    CHECK(euler_maruyama_step(flat, x, 0.1, z) == x);

    const int n = 100000;
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::Vector2d zi(rng::normal_at(8, rng::Domain::Increment, i, 0, 0), rng::normal_at(8, rng::Domain::Increment, i, 0, 1));
        const auto out = euler_maruyama_step(flat, Eigen::Vector2d::Zero(), 0.01, zi);
        s0 += out[0] * out[0];
        s1 += out[1] * out[1];
    }
    CHECK(std::abs(s0 / n - 0.01) <= 3e-4);
    CHECK(std::abs(s1 / n - 0.01) <= 3e-4);
    CHECK_THROWS_AS(euler_maruyama_step(flat, x, 0.0, z), InputError);
}

TEST_CASE("deterministic flow with zero noise") {
    SampleMatrix init(3, 2);
    init << 1, 2, -3, 0.5, 0, 0;
    const auto t = simulate(ou(0.0), init, {0.0, 0.01}, 1);
    CHECK((t.positions[1] - init * (1 - 0.01)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(ou(0.0).validate(), InputError);
}

TEST_CASE("default protocol yields six snapshots of 1000 samples") {
    const auto init = sample_initial(UniformBox{2, 4.0}, 1000, 1);
    const auto t = simulate(quad(0.2), init, uniform_times(0.01, 5), 2);
    const auto s = shuffle_to_snapshots(t, 3);
    CHECK(s.size() == 6);
    for (const auto& snap : s.samples) {
        CHECK(snap.rows() == 1000);
    }
    CHECK(t.positions[0] == init);
}

TEST_CASE("long run reaches the Gibbs variance") {
    const auto init = sample_initial(UniformBox{2, 4.0}, 10000, 4);
    const auto t = simulate(quad(0.2), init, {0.0, 2.0}, 5, {200, 1e6});
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_var(t.positions[1], c) - oracle::quadratic_gibbs_variance(0.2)) <= 0.005);
    }
}

TEST_CASE("weak order against exact Ornstein-Uhlenbeck moments") {
    const double x0 = 2.0, t_end = 0.5, dt = 0.001;
    const auto init = sample_initial(Dirac{Eigen::Vector2d(x0, -x0)}, 100000, 1);
    const int steps = static_cast<int>(t_end / dt + 0.5);
    const auto t = simulate(ou(1.0), init, {0.0, t_end}, 6, {steps, 1e6});
    const double mean = std::exp(-t_end) * x0;
    const double var = (1 - std::exp(-2 * t_end)) / 2;
    const double se_mean = std::sqrt(var / 100000.0);
    // Monte-Carlo error plus an O(dt) discretization allowance
    CHECK(std::abs(column_mean(t.positions[1], 0) - mean) <= 4 * se_mean + 2 * dt);
    CHECK(std::abs(column_mean(t.positions[1], 1) + mean) <= 4 * se_mean + 2 * dt);
    CHECK(std::abs(column_var(t.positions[1], 0) - var) <= 4 * var * std::sqrt(2.0 / 100000) + 2 * dt);
}

TEST_CASE("simulation is bit-identical across thread counts") {
    const auto init = sample_initial(UniformBox{2, 4.0}, 500, 1);
    const unsigned before = thread_count();
    set_thread_count(1);
    const auto a = simulate(quad(0.2), init, uniform_times(0.01, 5), 42);
    set_thread_count(4);
    const auto b = simulate(quad(0.2), init, uniform_times(0.01, 5), 42);
    set_thread_count(before);
    for (std::size_t i = 0; i < a.num_times(); ++i) {
        CHECK(a.positions[i] == b.positions[i]);
    }
    const auto c = simulate(quad(0.2), init, uniform_times(0.01, 5), 43);
    CHECK(c.positions[1] != a.positions[1]);
}

TEST_CASE("divergence names the path") {
    // Psi = -x^4 pushes everything outward
    const LangevinModel bad{PolynomialPotential(2, 4, {{MultiIndex({4, 0}), -1.0}}), 0.0};
    SampleMatrix init(3, 2);
    init << 0, 0, 0, 0, 5, 0;
    try {
        simulate(bad, init, uniform_times(0.1, 20), 1);
        FAIL("expected divergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("path 2") != std::string::npos);
    }
}

TEST_CASE("time grids are validated") {
    const auto init = sample_initial(UniformBox{2, 4.0}, 5, 1);
    CHECK_THROWS_AS(simulate(quad(0.2), init, {0.0, 0.2, 0.1}, 1), InputError);
    CHECK_THROWS_AS(simulate(quad(0.2), init, {0.1, 0.2}, 1), InputError);
    CHECK_THROWS_AS(simulate(quad(0.2), SampleMatrix::Zero(5, 3), {0.0, 0.1}, 1), InputError);
}

TEST_CASE("shuffling keeps every cloud and destroys pairing") {
    const auto one = simulate(quad(0.2), sample_initial(UniformBox{2, 4.0}, 1, 1), uniform_times(0.01, 3), 2);
    const auto s1 = shuffle_to_snapshots(one, 5);
    for (std::size_t t = 0; t < one.num_times(); ++t) {
        CHECK(s1.samples[t] == one.positions[t]);
    }

    const auto t = simulate(quad(0.2), sample_initial(UniformBox{2, 4.0}, 1000, 1), uniform_times(0.01, 2), 2);
    const auto s = shuffle_to_snapshots(t, 7);
    for (std::size_t i = 0; i < t.num_times(); ++i) {
        CHECK(rows_of(s.samples[i]) == rows_of(t.positions[i]));
    }

    // a uniform permutation has one fixed point on average
    long fixed = 0;
    const int draws = 200;
    for (int k = 0; k < draws; ++k) {
        const auto sk = shuffle_to_snapshots(t, static_cast<Seed>(100 + k), {1});
        for (Eigen::Index r = 0; r < 1000; ++r) {
            fixed += sk.samples[0].row(r) == t.positions[1].row(r) ? 1 : 0;
        }
    }
    CHECK(std::abs(static_cast<double>(fixed) - draws) <= 3 * std::sqrt(static_cast<double>(draws)));

    const auto sub = shuffle_to_snapshots(t, 7, {0, 2});
    CHECK(sub.times == std::vector<double>{0.0, t.times[2]});
    CHECK_THROWS_AS(shuffle_to_snapshots(t, 7, {2, 1}), InputError);
}

TEST_CASE("stationary initial laws") {
    const auto g = sample_initial(GibbsOf{quad(0.2), 2000, std::nullopt}, 4000, 3);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_var(g, c) - 0.05) <= 0.01);
    }
    const auto b = sample_initial(LangevinBurnIn{quad(0.2), 200, 0.01, 4.0}, 4000, 3);
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(column_var(b, c) - 0.05) <= 0.01);
    }
    CHECK(is_stationary_init(GibbsOf{quad(0.2), 10, std::nullopt}));
    CHECK_FALSE(is_stationary_init(UniformBox{2, 4.0}));
}

} // TEST_SUITE
