#include "doctest.h"

#include "sdeid/io.hpp"
#include "sdeid/rng.hpp"

#include <filesystem>

using namespace sdeid;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sdeid_io_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("potentials and models round-trip through JSON") {
    std::vector<Potential> ps = {make_named(NamedKind::Quadratic), make_named(NamedKind::OakleyOhagan),
                                 scale_potential(make_named(NamedKind::WavyPlateau), 2.5),
                                 PolynomialPotential(2, 3, {{MultiIndex({3, 0}), -0.25}, {MultiIndex({1, 1}), 1.0 / 3.0}})};
    for (const auto& p : ps) {
        const auto j = io::to_json(p);
        const auto back = io::potential_from_json(io::json::parse(j.dump()));
        CHECK(io::to_json(back) == j);
        const Eigen::VectorXd x = Eigen::Vector2d(0.37, -1.9);
        CHECK(eval_potential(back, x) == eval_potential(p, x));
    }
    const LangevinModel m{make_named(NamedKind::Bohachevsky), 0.2};
    const auto mj = io::to_json(m);
    CHECK(io::model_from_json(mj).sigma2 == 0.2);
    CHECK(mj.at("sigma2") == 0.2);
    CHECK_THROWS_AS(io::potential_from_json({{"kind", "mystery"}}), InputError);
    CHECK_THROWS_AS(io::model_from_json({{"potential", io::to_json(ps[0])}, {"sigma2", -1.0}}), InputError);
}

TEST_CASE("initial distributions and estimator settings round-trip") {
    const LangevinModel m{make_named(NamedKind::Quadratic), 0.2};
    const std::vector<io::json> inits = {
        {{"kind", "uniform"}, {"d", 2}, {"half_length", 4.0}},
        {{"kind", "rademacher"}, {"d", 2}, {"level", 1.0}},
        {{"kind", "dirac"}, {"point", {0.5, -1.0}}},
        {{"kind", "gaussian"}, {"mean", {0.0, 0.0}}, {"covariance", {{1.0, 0.0}, {0.0, 2.0}}}},
        {{"kind", "burn_in"}, {"steps", 100}, {"dt", 0.01}, {"start_half_length", 4.0}},
    };
    for (const auto& j : inits) {
        CHECK(io::to_json(io::init_from_json(j, &m)) == j);
    }
    CHECK_THROWS_AS(io::init_from_json({{"kind", "gibbs"}, {"steps", 10}}, nullptr), InputError);

    EstimatorConfig c;
    c.degree = 3;
    c.sinkhorn.epsilon_scale = 0.25;
    c.sigma2_init = Sigma2Init::AllPairs;
    const auto back = io::estimator_config_from_json(io::to_json(c));
    CHECK(back.degree == 3);
    CHECK(back.sinkhorn.epsilon_scale == 0.25);
    CHECK(back.sigma2_init == Sigma2Init::AllPairs);
    CHECK(io::estimator_config_from_json(io::json::object()).degree == EstimatorConfig{}.degree);
    CHECK_THROWS_AS(io::estimator_config_from_json({{"degre", 3}}), InputError);
}

TEST_CASE("estimation results round-trip") {
    EstimationResult r;
    r.potential = PolynomialPotential(2, 2, {{MultiIndex({2, 0}), 0.9}, {MultiIndex({0, 1}), -0.1}});
    r.sigma2_hat = 0.21;
    r.degree = 2;
    r.iterations = 4;
    r.loglik_trace = {-3.0, -2.5};
    r.data_setting = DataSetting::Marginals;
    r.warnings = {"a warning"};
    const auto j = io::to_json(r);
    const auto back = io::estimation_result_from_json(io::json::parse(j.dump()));
    CHECK(io::to_json(back) == j);
    CHECK(back.potential == r.potential);
}

TEST_CASE("doubles print in their shortest round-trip form") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(-2.5) == "-2.5");
    rng::Stream s(1, rng::Domain::Derive, 0);
    for (int i = 0; i < 1000; ++i) {
        const double v = (s.uniform() - 0.5) * std::pow(10.0, 40 * s.uniform() - 20);
        const std::string t = io::format_double(v);
        CHECK(std::stod(t) == v);
        CHECK(t.find_first_of("0123456789") != std::string::npos);
    }
}

TEST_CASE("snapshot CSV") {
    SnapshotSeries s;
    s.times = {0.0, 0.01};
    s.samples = {SampleMatrix(2, 2), SampleMatrix(2, 2)};
    s.samples[0] << 0.1, 0.2, 1.0 / 3.0, -4.0;
    s.samples[1] << 5e-17, 1e10, -0.75, 2.0;
    const std::string text = io::snapshots_to_csv(s);
    CHECK(text.rfind("time,sample_id,x1,x2\n", 0) == 0);
    const auto back = io::snapshots_from_csv(text);
    CHECK(back.times == s.times);
    CHECK(back.samples[0] == s.samples[0]);
    CHECK(back.samples[1] == s.samples[1]);
    CHECK(io::snapshots_to_csv(back) == text);
    CHECK(io::detect_dataset(text) == io::DatasetKind::Snapshots);

    CHECK(error_of([] { io::snapshots_from_csv("time,sample_id,x1,x2\n0,0,1,2\n0,1,nan,2\n"); }).find("row 3") == 0);
    CHECK(error_of([] { io::snapshots_from_csv("time,sample_id,x1,x2\n0,0,1,2\n0,0,1,2\n"); }).find("row 3") == 0);
    CHECK(error_of([] { io::snapshots_from_csv("time,sample_id,x1,x2\n0,0,1\n"); }).find("row 2") == 0);
    CHECK(error_of([] { io::snapshots_from_csv(""); }).find("row 1") == 0);
}

TEST_CASE("trajectory CSV") {
    TrajectorySet t;
    t.times = {0.0, 0.5, 1.0};
    for (int k = 0; k < 3; ++k) {
        SampleMatrix m(3, 2);
        m << k, 1, 2, k * 0.1, -1, 1e-3;
        t.positions.push_back(m);
    }
    const std::string text = io::trajectories_to_csv(t);
    CHECK(text.rfind("path_id,time,x1,x2\n", 0) == 0);
    const auto back = io::trajectories_from_csv(text);
    CHECK(back.times == t.times);
    for (int k = 0; k < 3; ++k) {
        CHECK(back.positions[k] == t.positions[k]);
    }
    CHECK(io::detect_dataset(text) == io::DatasetKind::Trajectories);
    CHECK(error_of([] { io::trajectories_from_csv("path_id,time,x1\n0,0,1\n0,0,2\n"); }).find("row 3") == 0);
    CHECK_THROWS_AS(io::detect_dataset("a,b,c\n"), InputError);
}

TEST_CASE("SHA-256 known vectors") {
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("atomic file writes") {
    const fs::path dir = scratch_dir("atomic");
    const fs::path target = dir / "nested" / "out.json";
    io::write_json_file(target, {{"a", 1}});
    io::write_file_atomic(target, "{\"a\": 2}\n");
    CHECK(io::read_json_file(target).at("a") == 2);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) {
        ++files;
    }
    CHECK(files == 1);
    io::write_file_atomic(dir / "bad.json", "{ nope");
    CHECK_THROWS_AS(io::read_json_file(dir / "bad.json"), InputError);
    CHECK_THROWS_AS(io::read_file(dir / "missing.csv"), InputError);
    fs::remove_all(dir);
}

} // TEST_SUITE
