#include "doctest.h"

#include "sdeid/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

using namespace sdeid;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI with the output root pointed at `root`.
Run cli(const fs::path& root, const std::string& args) {
    const fs::path so = root / "stdout.txt", se = root / "stderr.txt";
    const std::string cmd = "cd '" + root.string() + "' && SDEID_OUTPUT_ROOT='" + root.string() + "' '" +
                            std::string(SDEID_CLI_PATH) + "' " + args + " > '" + so.string() + "' 2> '" +
                            se.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = io::read_file(so);
    r.err = io::read_file(se);
    return r;
}

fs::path fresh(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sdeid_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const char* kConfig = R"({"name":"quad","model":{"potential":{"kind":"quadratic"},"sigma2":0.2},
  "init":{"kind":"uniform","d":2,"half_length":4},"replicates":1,"seed":7,"n_samples":1000,
  "schedule":{"dt":0.01,"n_steps":5},"estimator":{"degree":2}})";

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_SUITE("cli") {

TEST_CASE("generate writes snapshots, trajectories and a manifest") {
    const fs::path root = fresh("generate");
    io::write_file_atomic(root / "cfg.json", kConfig);
    const auto r = cli(root, "generate cfg.json");
    REQUIRE(r.code == 0);
    const std::string snaps = io::read_file(root / "quad" / "replicate_0" / "snapshots.csv");
    CHECK(count_lines(snaps) == 1 + 6 * 1000);
    const auto s = io::snapshots_from_csv(snaps);
    CHECK(s.size() == 6);
    CHECK(s.times.back() == doctest::Approx(0.05));
    const auto t = io::trajectories_from_csv(io::read_file(root / "quad" / "replicate_0" / "trajectories.csv"));
    CHECK(t.num_paths() == 1000);

    const auto m = io::read_json_file(root / "quad" / "manifest.json");
    for (const auto& f : m.at("files")) {
        const std::string text = io::read_file(root / "quad" / f.at("path").get<std::string>());
        CHECK(f.at("sha256") == io::sha256_hex(text));
    }
    fs::remove_all(root);
}

TEST_CASE("estimation output is byte-identical across runs") {
    const fs::path root = fresh("estimate");
    io::write_file_atomic(root / "cfg.json", kConfig);
    REQUIRE(cli(root, "generate cfg.json --n-samples 300").code == 0);
    const std::string data = (root / "quad" / "replicate_0" / "snapshots.csv").string();
    const auto a = cli(root, "estimate '" + data + "' --degree 2 --seed 5 --out a.json");
    const auto b = cli(root, "estimate '" + data + "' --degree 2 --seed 5 --out b.json");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(io::read_file(root / "a.json") == io::read_file(root / "b.json"));
    const auto j = io::read_json_file(root / "a.json");
    CHECK(j.at("dataset_sha256") == io::sha256_hex(io::read_file(data)));
    CHECK(j.contains("stationarity_warning"));

    const auto stdout_run = cli(root, "estimate '" + data + "' --degree 2 --seed 5");
    REQUIRE(stdout_run.code == 0);
    CHECK(io::json::parse(stdout_run.out) == j);

    const auto traj = cli(root, "estimate '" + (root / "quad" / "replicate_0" / "trajectories.csv").string() +
                                    "' --degree 2 --out t.json");
    REQUIRE(traj.code == 0);
    CHECK(io::read_json_file(root / "t.json").dump().find("trajectories") != std::string::npos);

    const auto ev = cli(root, "evaluate --truth cfg.json a.json --out eval");
    REQUIRE(ev.code == 0);
    CHECK(fs::exists(root / "eval" / "metrics.csv"));
    CHECK(fs::exists(root / "eval" / "summary.csv"));
    fs::remove_all(root);
}

TEST_CASE("input errors exit with code 2") {
    const fs::path root = fresh("errors");
    io::write_file_atomic(root / "bad.csv", "time,sample_id,x1,x2\n0,0,1,2\n0,1,abc,2\n");
    const auto bad = cli(root, "estimate bad.csv");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("row 3") != std::string::npos);

    CHECK(cli(root, "estimate missing.csv").code == 2);
    CHECK(cli(root, "no-such-command").code == 2);

    auto cfg = io::json::parse(kConfig);
    cfg["setting"] = "stationary";
    io::write_json_file(root / "stationary.json", cfg);
    const auto st = cli(root, "generate stationary.json");
    CHECK(st.code == 2);
    CHECK_FALSE(st.err.empty());

    io::write_file_atomic(root / "broken.json", "{ \"name\": ");
    CHECK(cli(root, "generate broken.json").code == 2);
    fs::remove_all(root);
}

TEST_CASE("numerical failures exit with code 3") {
    const fs::path root = fresh("numerical");
    auto cfg = io::json::parse(kConfig);
    cfg["model"]["potential"] = {{"kind", "polynomial"},
                                 {"d", 2},
                                 {"k", 4},
                                 {"coeffs", {{{"alpha", {4, 0}}, {"value", -1.0}}}}};
    io::write_json_file(root / "diverge.json", cfg);
    const auto r = cli(root, "generate diverge.json");
    CHECK(r.code == 3);
    CHECK(r.err.find("path") != std::string::npos);
    fs::remove_all(root);
}

TEST_CASE("fisher and reproduce commands") {
    const fs::path root = fresh("fisher");
    io::write_file_atomic(root / "f.json", R"({"model":{"potential":{"kind":"quadratic"},"sigma2":0.2},
        "init":{"kind":"uniform","d":2,"half_length":1},"dt":0.001,"n":5000,"seed":3,"degree":2})");
    REQUIRE(cli(root, "fisher f.json --out fout").code == 0);
    bool any_json = false;
    for (const auto& e : fs::directory_iterator(root / "fout")) {
        any_json = any_json || e.path().extension() == ".json";
    }
    CHECK(any_json);
    const auto list = cli(root, "reproduce list");
    CHECK(list.code == 0);
    CHECK(list.out.find("rescaling_test") != std::string::npos);
    CHECK(cli(root, "reproduce nothing_here").code == 2);
    fs::remove_all(root);
}

} // TEST_SUITE
