// sdeid: command-line front end for simulation, estimation, evaluation,
// Fisher sweeps and the bundled desk-scale experiments.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include "sdeid/experiment.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace sdeid;
using experiment::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

fs::path under_root(const fs::path& p) { return p.is_absolute() ? p : experiment::output_root() / p; }

// Single-field overrides shared by the estimator-facing commands.
struct EstimatorFlags {
    std::optional<int> degree;
    std::optional<Seed> seed;
    std::optional<double> epsilon_scale;
    std::optional<int> max_outer;

    void add(CLI::App* cmd) {
        cmd->add_option("--degree", degree, "Polynomial degree of the drift basis");
        cmd->add_option("--seed", seed, "Estimator seed");
        cmd->add_option("--epsilon-scale", epsilon_scale, "Entropic regularization scale");
        cmd->add_option("--max-outer", max_outer, "Outer iterations of the alternating estimator");
    }
    void apply(EstimatorConfig& c) const {
        if (degree) {
            c.degree = *degree;
        }
        if (seed) {
            c.seed = *seed;
        }
        if (epsilon_scale) {
            c.sinkhorn.epsilon_scale = *epsilon_scale;
        }
        if (max_outer) {
            c.max_outer = *max_outer;
        }
    }
};

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string config;
    std::string out;
    std::optional<Seed> seed;
    std::optional<int> replicates;
    std::optional<std::size_t> n_samples;
};

int cmd_generate(const GenerateArgs& a) {
    json j = io::read_json_file(a.config);
    if (a.seed) {
        j["seed"] = *a.seed;
    }
    if (a.replicates) {
        j["replicates"] = *a.replicates;
    }
    if (a.n_samples) {
        j["n_samples"] = *a.n_samples;
    }
    auto c = experiment::config_from_json(j);
    if (!a.out.empty()) {
        c.output_dir = a.out;
    }
    const fs::path dir = experiment::output_directory(c);
    const auto reps = static_cast<std::size_t>(c.replicates);

    std::vector<experiment::Dataset> data(reps);
    parallel_for(reps, [&](std::size_t r) { data[r] = experiment::generate_dataset(c, static_cast<int>(r)); });

    std::vector<fs::path> files;
    json seeds = json::array();
    for (std::size_t r = 0; r < reps; ++r) {
        const fs::path sub = "replicate_" + std::to_string(r);
        io::write_file_atomic(dir / sub / "trajectories.csv", io::trajectories_to_csv(data[r].trajectories));
        io::write_file_atomic(dir / sub / "snapshots.csv", io::snapshots_to_csv(data[r].snapshots));
        files.push_back(sub / "trajectories.csv");
        files.push_back(sub / "snapshots.csv");
        seeds.push_back({{"replicate", r}, {"seed", data[r].seed}});
    }
    io::write_json_file(dir / "config.json", experiment::to_json(c));
    files.emplace_back("config.json");
    experiment::write_manifest(dir, {{"command", "generate"}, {"base_seed", c.seed}, {"replicates", seeds}}, files);
    std::cout << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string dataset;
    std::string config;
    std::string out;
    std::vector<double> regimes;
    EstimatorFlags flags;
};

int cmd_estimate(const EstimateArgs& a) {
    EstimatorConfig cfg;
    if (!a.config.empty()) {
        cfg = io::estimator_config_from_json(io::read_json_file(a.config));
    }
    a.flags.apply(cfg);
    const std::string text = io::read_file(a.dataset);
    const auto kind = io::detect_dataset(text);

    json out;
    if (kind == io::DatasetKind::Trajectories) {
        const auto trajs = io::trajectories_from_csv(text);
        out = io::to_json(mle_from_trajectories(trajs, cfg.degree, cfg.sigma2_floor));
        out["dataset_kind"] = "trajectories";
    } else {
        const auto series = io::snapshots_from_csv(text);
        if (!a.regimes.empty()) {
            const auto parts = estimate_piecewise(series, RegimeSpec{a.regimes}, cfg);
            json list = json::array();
            for (const auto& p : parts) {
                list.push_back(io::to_json(p));
            }
            out["regimes"] = {{"boundaries", a.regimes}, {"results", list}};
        } else {
            auto result = appex_estimate(series, cfg);
            const auto warning = stationarity_warning(series, cfg);
            if (warning) {
                result.warnings.push_back(*warning);
            }
            out = io::to_json(result);
            out["stationarity_warning"] = warning.has_value();
        }
        json records = json::array();
        for (const auto& r : stationarity_test(series, cfg.stationarity_permutations, cfg.seed)) {
            records.push_back(io::to_json(r));
        }
        out["stationarity"] = records;
        out["dataset_kind"] = "snapshots";
    }
    out["config"] = io::to_json(cfg);
    out["dataset_sha256"] = io::sha256_hex(text);

    if (a.out.empty()) {
        std::cout << out.dump(2) << '\n';
    } else {
        io::write_json_file(under_root(a.out), out);
    }
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string truth;
    std::vector<std::string> results;
    std::string metrics;
    std::string setting = "transient";
    std::string out;
    Seed seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    const json tj = io::read_json_file(a.truth);
    // either a bare model or an experiment config carrying one
    const LangevinModel truth = io::model_from_json(tj.contains("model") ? tj.at("model") : tj);
    experiment::MetricsConfig m;
    if (!a.metrics.empty()) {
        m = experiment::metrics_config_from_json(io::read_json_file(a.metrics));
    }
    const auto pts = experiment::evaluation_points(truth, m, a.seed);
    const std::string id = experiment::model_id(truth);

    std::vector<experiment::MetricRow> rows;
    for (std::size_t r = 0; r < a.results.size(); ++r) {
        const json rj = io::read_json_file(a.results[r]);
        // estimation results carry sigma2_hat, bare models sigma2
        const LangevinModel est =
            rj.contains("sigma2_hat") ? io::estimation_result_from_json(rj).model() : io::model_from_json(rj);
        if (est.dimension() != truth.dimension()) {
            throw InputError(a.results[r] + ": estimate and truth differ in dimension");
        }
        auto part = experiment::evaluate(truth, est, pts, m, id, a.setting, static_cast<int>(r));
        rows.insert(rows.end(), part.begin(), part.end());
    }
    const auto summary = experiment::summarize(rows);
    json jrows = json::array();
    json jsum = json::array();
    for (const auto& r : rows) {
        jrows.push_back(experiment::to_json(r));
    }
    for (const auto& s : summary) {
        jsum.push_back(experiment::to_json(s));
    }
    const json report = {{"rows", jrows}, {"summary", jsum}, {"metrics", experiment::to_json(m)}};
    if (a.out.empty()) {
        std::cout << experiment::summary_csv(summary);
    } else {
        const fs::path dir = under_root(a.out);
        io::write_json_file(dir / "metrics.json", report);
        io::write_file_atomic(dir / "metrics.csv", experiment::metric_rows_csv(rows));
        io::write_file_atomic(dir / "summary.csv", experiment::summary_csv(summary));
        std::cout << experiment::summary_csv(summary);
    }
    return 0;
}

// ---------------------------------------------------------------- fisher

struct FisherArgs {
    std::string config;
    std::string out;
    std::optional<Seed> seed;
};

// {"model":..., "init":..., "dt":..., "n":..., "seed":..., "degree":0, "gap_resamples":0}
json single_fisher(const json& j, std::optional<Seed> seed_override) {
    for (const auto& [k, v] : j.items()) {
        static const std::vector<std::string> allowed{"model", "init", "dt", "n", "seed", "degree", "gap_resamples"};
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InputError("fisher: unknown field '" + k + "'");
        }
    }
    const LangevinModel model = io::model_from_json(j.at("model"));
    const InitialDistribution init = io::init_from_json(j.at("init"), &model);
    const double dt = j.value("dt", 1e-3);
    const std::size_t n = j.value("n", std::size_t{100000});
    const Seed seed = seed_override ? *seed_override : j.value("seed", Seed{0});
    const int degree = j.value("degree", 0);
    const int gap = j.value("gap_resamples", 0);
    require(dt > 0.0 && n >= 2, "fisher: needs dt > 0 and n >= 2");
    const auto x0 = sample_initial(init, n, rng::derive_seed(seed, 1));
    const auto trajs = simulate(model, x0, {0.0, dt}, rng::derive_seed(seed, 2));
    json out = io::to_json(empirical_score_variance(model, trajs, degree));
    if (gap > 0) {
        const auto coupling = sinkhorn_coupling(trajs.positions[0], trajs.positions[1], model, dt, SinkhornConfig{});
        out["gap"] = io::to_json(information_gap_estimate(model, trajs, coupling, gap, rng::derive_seed(seed, 5), degree));
    }
    return out;
}

int cmd_fisher(const FisherArgs& a) {
    json j = io::read_json_file(a.config);
    const fs::path dir = under_root(a.out.empty() ? fs::path("fisher") : fs::path(a.out));
    if (j.contains("init")) {
        const json rep = single_fisher(j, a.seed);
        io::write_json_file(dir / "fisher.json", rep);
        std::cout << rep.dump(2) << '\n';
        return 0;
    }
    if (a.seed) {
        j["seed"] = *a.seed;
    }
    const auto c = experiment::sweep_config_from_json(j);
    const auto res = experiment::run_sweep(c);
    json summary = experiment::to_json(res);
    summary["config"] = experiment::to_json(c);
    json flags = json::object();
    auto flag = [&](const std::string& name, const std::string& q, auto test) {
        for (const auto& t : res.trends) {
            if (t.quantity == q) {
                flags[name] = test(t);
            }
        }
    };
    flag("trajectories_drift_mae_nonincreasing", "trajectories_drift_mae",
         [](const auto& t) { return experiment::monotone_with_one_inversion(t, -1); });
    flag("marginals_diffusion_mae_nondecreasing", "marginals_diffusion_mae",
         [](const auto& t) { return experiment::monotone_with_one_inversion(t, +1); });
    flag("marginals_diffusion_mae_flat_2x", "marginals_diffusion_mae",
         [](const auto& t) { return experiment::flat_within(t, 2.0); });
    flag("fisher_diffusion_theoretical_constant", "fisher_diffusion_theoretical",
         [](const auto& t) { return experiment::flat_within(t, 1.0); });
    summary["flags"] = flags;
    io::write_file_atomic(dir / "sweep.csv", experiment::sweep_rows_csv(res.rows));
    io::write_json_file(dir / "sweep.json", summary);
    experiment::write_manifest(dir, {{"command", "fisher"}, {"seed", c.seed}}, {"sweep.csv", "sweep.json"});
    std::cout << flags.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- reproduce

struct ReproduceArgs {
    std::string name;
    std::string out;
    bool quick = false;
};

int cmd_reproduce(const ReproduceArgs& a) {
    if (a.name == "list") {
        for (const auto& n : experiment::reproducible_experiments()) {
            std::cout << n << '\n';
        }
        return 0;
    }
    const fs::path dir = under_root(a.out.empty() ? fs::path(a.name) : fs::path(a.out));
    const json summary = experiment::reproduce(a.name, dir, a.quick);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identification of drift and diffusivity in Langevin SDEs from trajectories or marginals"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Simulate datasets from an experiment config");
    g->add_option("config", gen.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    g->add_option("--out", gen.out, "Output directory (relative to SDEID_OUTPUT_ROOT)");
    g->add_option("--seed", gen.seed, "Base seed");
    g->add_option("--replicates", gen.replicates, "Number of replicates");
    g->add_option("--n-samples", gen.n_samples, "Paths per replicate");

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "Estimate drift and diffusivity from a dataset CSV");
    e->add_option("dataset", est.dataset, "snapshots.csv or trajectories.csv")->required()->check(CLI::ExistingFile);
    e->add_option("--config", est.config, "Estimator config JSON")->check(CLI::ExistingFile);
    e->add_option("--out", est.out, "Result JSON path (stdout when omitted)");
    e->add_option("--regimes", est.regimes, "Regime boundaries t0 t1 ... for piecewise estimation")->delimiter(',');
    est.flags.add(e);

    EvaluateArgs ev;
    auto* v = app.add_subcommand("evaluate", "Compare estimates against the true model");
    v->add_option("--truth", ev.truth, "True model JSON or experiment config")->required()->check(CLI::ExistingFile);
    v->add_option("results", ev.results, "Estimation result JSON files, one per replicate")
        ->required()
        ->check(CLI::ExistingFile);
    v->add_option("--metrics", ev.metrics, "Metrics config JSON")->check(CLI::ExistingFile);
    v->add_option("--setting", ev.setting, "Label for the setting column");
    v->add_option("--out", ev.out, "Output directory for metrics.json, metrics.csv and summary.csv");
    v->add_option("--seed", ev.seed, "Seed for the Gibbs evaluation points");

    FisherArgs fi;
    auto* f = app.add_subcommand("fisher", "Fisher information for one init or a sweep over an init family");
    f->add_option("config", fi.config, "Fisher or sweep config JSON")->required()->check(CLI::ExistingFile);
    f->add_option("--out", fi.out, "Output directory");
    f->add_option("--seed", fi.seed, "Seed");

    ReproduceArgs rep;
    auto* r = app.add_subcommand("reproduce", "Run a bundled experiment ('list' shows the names)");
    r->add_option("name", rep.name, "Experiment name")->required();
    r->add_option("--out", rep.out, "Output directory");
    r->add_flag("--quick", rep.quick, "Fewer replicates and samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*g) {
            return cmd_generate(gen);
        }
        if (*e) {
            return cmd_estimate(est);
        }
        if (*v) {
            return cmd_evaluate(ev);
        }
        if (*f) {
            return cmd_fisher(fi);
        }
        return cmd_reproduce(rep);
    } catch (const InputError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const json::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& err) {
        std::cerr << "numerical failure: " << err.what() << '\n';
        return kExitNumerical;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInput;
    }
}
