#include "sdeid/experiment.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace sdeid::experiment {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw InputError(where + ": " + what); }

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        bad(where, "expected an object");
    }
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
            bad(where, "unknown field '" + k + "'");
        }
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(where + "." + key, "has the wrong type");
    }
}

std::string alpha_label(const MultiIndex& a) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < a.exponents.size(); ++i) {
        os << (i ? "," : "") << a.exponents[i];
    }
    os << ']';
    return os.str();
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

std::string to_string(Setting s) { return s == Setting::Transient ? "transient" : "stationary"; }

Setting setting_from_string(const std::string& s) {
    if (s == "transient") {
        return Setting::Transient;
    }
    if (s == "stationary") {
        return Setting::Stationary;
    }
    throw InputError("setting: expected transient or stationary, got '" + s + "'");
}

std::vector<double> Schedule::resolve() const {
    if (!times.empty()) {
        return times;
    }
    require(dt > 0.0 && n_steps >= 1, "schedule: dt must be positive and n_steps at least 1");
    return uniform_times(dt, n_steps);
}

void ExperimentConfig::validate() const {
    model.validate();
    require(replicates >= 1, "replicates must be at least 1");
    require(n_samples >= 1, "n_samples must be at least 1");
    require(schedule.substeps >= 1, "schedule.substeps must be at least 1");
    const auto t = schedule.resolve();
    require(t.size() >= 2 && t.front() == 0.0, "schedule: times must start at 0 and contain at least two entries");
    for (std::size_t i = 1; i < t.size(); ++i) {
        require(t[i] > t[i - 1], "schedule: times must be strictly increasing");
    }
    require(distribution_dimension(init) == model.dimension(), "init and model differ in dimension");
    if (setting == Setting::Stationary && !is_stationary_init(init)) {
        throw InputError("setting 'stationary' requires a gibbs or burn_in initial distribution");
    }
    if (setting == Setting::Transient && is_stationary_init(init)) {
        throw InputError("setting 'transient' cannot start from the stationary law; use setting 'stationary'");
    }
    require(metrics.grid_per_axis >= 2 && metrics.grid_half_length > 0.0, "metrics: grid needs >= 2 points per axis");
}

json to_json(const MetricsConfig& m) {
    return {{"grid_half_length", m.grid_half_length},
            {"grid_per_axis", m.grid_per_axis},
            {"gibbs_points", m.gibbs_points},
            {"gibbs_steps", m.gibbs_steps},
            {"componentwise", m.componentwise}};
}

MetricsConfig metrics_config_from_json(const json& j) {
    const std::string where = "metrics";
    only_keys(j, {"grid_half_length", "grid_per_axis", "gibbs_points", "gibbs_steps", "componentwise"}, where);
    MetricsConfig m;
    m.grid_half_length = get_or(j, "grid_half_length", m.grid_half_length, where);
    m.grid_per_axis = get_or(j, "grid_per_axis", m.grid_per_axis, where);
    m.gibbs_points = get_or(j, "gibbs_points", m.gibbs_points, where);
    m.gibbs_steps = get_or(j, "gibbs_steps", m.gibbs_steps, where);
    m.componentwise = get_or(j, "componentwise", m.componentwise, where);
    return m;
}

ExperimentConfig config_from_json(const json& j) {
    const std::string where = "config";
    only_keys(j,
              {"name", "model", "init", "schedule", "setting", "n_samples", "replicates", "seed", "include_initial",
               "estimator", "metrics", "output_dir"},
              where);
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", c.name, where);
    if (!j.contains("model")) {
        bad(where, "missing field 'model'");
    }
    c.model = io::model_from_json(j.at("model"));
    if (j.contains("init")) {
        c.init = io::init_from_json(j.at("init"), &c.model);
    } else {
        c.init = UniformBox{c.model.dimension(), 4.0};
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        only_keys(s, {"dt", "n_steps", "times", "substeps"}, "schedule");
        c.schedule.dt = get_or(s, "dt", c.schedule.dt, "schedule");
        c.schedule.n_steps = get_or(s, "n_steps", c.schedule.n_steps, "schedule");
        c.schedule.times = get_or(s, "times", c.schedule.times, "schedule");
        c.schedule.substeps = get_or(s, "substeps", c.schedule.substeps, "schedule");
    }
    if (j.contains("setting")) {
        c.setting = setting_from_string(get_or<std::string>(j, "setting", "", where));
    }
    c.n_samples = get_or(j, "n_samples", c.n_samples, where);
    c.replicates = get_or(j, "replicates", c.replicates, where);
    c.seed = get_or(j, "seed", c.seed, where);
    c.include_initial = get_or(j, "include_initial", c.include_initial, where);
    if (j.contains("estimator")) {
        c.estimator = io::estimator_config_from_json(j.at("estimator"));
    }
    if (j.contains("metrics")) {
        c.metrics = metrics_config_from_json(j.at("metrics"));
    }
    c.output_dir = get_or(j, "output_dir", c.output_dir, where);
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c) {
    json sched = {{"substeps", c.schedule.substeps}};
    if (c.schedule.times.empty()) {
        sched["dt"] = c.schedule.dt;
        sched["n_steps"] = c.schedule.n_steps;
    } else {
        sched["times"] = c.schedule.times;
    }
    json out = {{"name", c.name},
                {"model", io::to_json(c.model)},
                {"init", io::to_json(c.init)},
                {"schedule", sched},
                {"setting", to_string(c.setting)},
                {"n_samples", c.n_samples},
                {"replicates", c.replicates},
                {"seed", c.seed},
                {"include_initial", c.include_initial},
                {"estimator", io::to_json(c.estimator)},
                {"metrics", to_json(c.metrics)}};
    if (!c.output_dir.empty()) {
        out["output_dir"] = c.output_dir;
    }
    return out;
}

std::filesystem::path output_root() {
    const char* env = std::getenv("SDEID_OUTPUT_ROOT");
    return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::current_path();
}

std::filesystem::path output_directory(const ExperimentConfig& c) {
    const std::filesystem::path dir = c.output_dir.empty() ? std::filesystem::path(c.name) : std::filesystem::path(c.output_dir);
    return dir.is_absolute() ? dir : output_root() / dir;
}

Seed replicate_seed(Seed base, int replicate) { return rng::derive_seed(base, static_cast<std::uint64_t>(replicate)); }

Dataset generate_dataset(const ExperimentConfig& c, int replicate) {
    c.validate();
    const Seed s = replicate_seed(c.seed, replicate);
    const SampleMatrix x0 = sample_initial(c.init, c.n_samples, rng::derive_seed(s, 1));
    Dataset ds;
    ds.seed = s;
    ds.trajectories = simulate(c.model, x0, c.schedule.resolve(), rng::derive_seed(s, 2), {c.schedule.substeps, 1e6});
    std::vector<std::size_t> keep;
    for (std::size_t t = c.include_initial ? 0 : 1; t < ds.trajectories.num_times(); ++t) {
        keep.push_back(t);
    }
    ds.snapshots = shuffle_to_snapshots(ds.trajectories, rng::derive_seed(s, 3), keep);
    return ds;
}

EstimatorConfig replicate_estimator(const ExperimentConfig& c, int replicate) {
    EstimatorConfig e = c.estimator;
    e.seed = rng::derive_seed(replicate_seed(c.seed, replicate), 4);
    return e;
}

// ---------------------------------------------------------------- metrics

std::string model_id(const LangevinModel& m) {
    std::string kind = "polynomial";
    if (const auto* n = std::get_if<NamedPotential>(&m.potential)) {
        kind = to_string(n->kind);
    }
    return kind + "_s" + io::format_double(m.sigma2);
}

EvaluationPoints evaluation_points(const LangevinModel& truth, const MetricsConfig& m, Seed seed) {
    EvaluationPoints pts;
    pts.grid = grid_points(m.grid_half_length, m.grid_per_axis, truth.dimension());
    if (m.gibbs_points > 0) {
        pts.gibbs = gibbs_eval_points(truth, m.gibbs_points, seed, m.gibbs_steps);
    }
    return pts;
}

std::vector<MetricRow> evaluate(const LangevinModel& truth, const LangevinModel& estimate, const EvaluationPoints& pts,
                                const MetricsConfig& m, const std::string& id, const std::string& setting,
                                int replicate) {
    require(truth.dimension() == estimate.dimension(), "truth and estimate differ in dimension");
    const MetricOptions opt{m.componentwise};
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& metric, double v) { rows.push_back({id, setting, metric, v, replicate}); };
    add("drift_mae_grid", drift_mae(truth.potential, estimate.potential, pts.grid, opt));
    if (pts.gibbs.rows() > 0) {
        add("drift_mae_gibbs", drift_mae(truth.potential, estimate.potential, pts.gibbs, opt));
    }
    add("cosine_grid", cosine_similarity(truth.potential, estimate.potential, pts.grid).mean);
    if (pts.gibbs.rows() > 0) {
        add("cosine_gibbs", cosine_similarity(truth.potential, estimate.potential, pts.gibbs).mean);
    }
    add("diffusivity_mae", diffusivity_mae(truth.sigma2, estimate.sigma2));
    return rows;
}

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> values;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(r.model_id, r.setting, r.metric);
        if (values.find(key) == values.end()) {
            order.push_back(key);
        }
        values[key].push_back(r.value);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : order) {
        const auto& v = values[key];
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), mean_of(v), sd_of(v), v.size()});
    }
    return out;
}

std::string metric_rows_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream out;
    out << "model_id,setting,metric,replicate,value\n";
    for (const auto& r : rows) {
        out << r.model_id << ',' << r.setting << ',' << r.metric << ',' << r.replicate << ','
            << io::format_double(r.value) << '\n';
    }
    return out.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "model_id,setting,metric,mean,sd,count\n";
    for (const auto& r : rows) {
        out << r.model_id << ',' << r.setting << ',' << r.metric << ',' << io::format_double(r.mean) << ','
            << io::format_double(r.sd) << ',' << r.count << '\n';
    }
    return out.str();
}

json to_json(const MetricRow& r) {
    return {{"model_id", r.model_id},
            {"setting", r.setting},
            {"metric", r.metric},
            {"value", r.value},
            {"replicate", r.replicate}};
}

json to_json(const SummaryRow& r) {
    return {{"model_id", r.model_id}, {"setting", r.setting}, {"metric", r.metric},
            {"mean", r.mean},         {"sd", r.sd},           {"count", r.count}};
}

CellResult run_cell(const ExperimentConfig& c) {
    c.validate();
    CellResult res;
    const auto reps = static_cast<std::size_t>(c.replicates);
    res.datasets.resize(reps);
    res.estimates.resize(reps);
    parallel_for(reps, [&](std::size_t r) {
        res.datasets[r] = generate_dataset(c, static_cast<int>(r));
        res.estimates[r] = appex_estimate(res.datasets[r].snapshots, replicate_estimator(c, static_cast<int>(r)));
    });
    const auto pts = evaluation_points(c.model, c.metrics, rng::derive_seed(c.seed, 0xE7A1u));
    const std::string id = model_id(c.model);
    for (std::size_t r = 0; r < reps; ++r) {
        auto rows = evaluate(c.model, res.estimates[r].model(), pts, c.metrics, id, to_string(c.setting),
                             static_cast<int>(r));
        res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    }
    return res;
}

// ---------------------------------------------------------------- sweeps

std::string to_string(InitFamily f) {
    switch (f) {
    case InitFamily::Uniform:
        return "uniform";
    case InitFamily::Rademacher:
        return "rademacher";
    case InitFamily::Gaussian:
        return "gaussian";
    case InitFamily::Dirac:
        return "dirac";
    }
    return "uniform";
}

InitFamily init_family_from_string(const std::string& s) {
    for (auto f : {InitFamily::Uniform, InitFamily::Rademacher, InitFamily::Gaussian, InitFamily::Dirac}) {
        if (to_string(f) == s) {
            return f;
        }
    }
    throw InputError("family: expected uniform, rademacher, gaussian or dirac, got '" + s + "'");
}

InitialDistribution family_member(InitFamily f, double level, int d) {
    switch (f) {
    case InitFamily::Uniform:
        require(level > 0.0, "uniform half-length must be positive");
        return UniformBox{d, level};
    case InitFamily::Rademacher:
        require(level > 0.0, "rademacher level must be positive");
        return Rademacher{d, level};
    case InitFamily::Gaussian:
        require(level > 0.0, "gaussian variance must be positive");
        return Gaussian{Eigen::VectorXd::Zero(d), level * Eigen::MatrixXd::Identity(d, d)};
    case InitFamily::Dirac:
        return Dirac{Eigen::VectorXd::Constant(d, level)};
    }
    return UniformBox{d, level};
}

SweepConfig sweep_config_from_json(const json& j) {
    const std::string where = "sweep";
    only_keys(j,
              {"model", "family", "levels", "n", "dt", "replicates", "seed", "estimate", "gap_resamples", "estimator",
               "metrics"},
              where);
    SweepConfig c;
    if (!j.contains("model")) {
        bad(where, "missing field 'model'");
    }
    c.model = io::model_from_json(j.at("model"));
    if (j.contains("family")) {
        c.family = init_family_from_string(get_or<std::string>(j, "family", "", where));
    }
    c.levels = get_or(j, "levels", c.levels, where);
    c.n = get_or(j, "n", c.n, where);
    c.dt = get_or(j, "dt", c.dt, where);
    c.replicates = get_or(j, "replicates", c.replicates, where);
    c.seed = get_or(j, "seed", c.seed, where);
    c.estimate = get_or(j, "estimate", c.estimate, where);
    c.gap_resamples = get_or(j, "gap_resamples", c.gap_resamples, where);
    if (j.contains("estimator")) {
        c.estimator = io::estimator_config_from_json(j.at("estimator"));
    }
    if (j.contains("metrics")) {
        c.metrics = metrics_config_from_json(j.at("metrics"));
    }
    if (c.levels.empty() || c.n < 2 || !(c.dt > 0.0) || c.replicates < 1 || c.gap_resamples < 0) {
        bad(where, "needs levels, n >= 2, dt > 0, replicates >= 1 and gap_resamples >= 0");
    }
    return c;
}

json to_json(const SweepConfig& c) {
    return {{"model", io::to_json(c.model)},
            {"family", to_string(c.family)},
            {"levels", c.levels},
            {"n", c.n},
            {"dt", c.dt},
            {"replicates", c.replicates},
            {"seed", c.seed},
            {"estimate", c.estimate},
            {"gap_resamples", c.gap_resamples},
            {"estimator", io::to_json(c.estimator)},
            {"metrics", to_json(c.metrics)}};
}

SweepResult run_sweep(const SweepConfig& c) {
    c.model.validate();
    const int d = c.model.dimension();
    const auto grid = grid_points(c.metrics.grid_half_length, c.metrics.grid_per_axis, d);
    const MetricOptions opt{c.metrics.componentwise};
    const std::size_t cells = c.levels.size() * static_cast<std::size_t>(c.replicates);
    std::vector<std::vector<SweepRow>> per_cell(cells);

    parallel_for(cells, [&](std::size_t cell) {
        const std::size_t li = cell / static_cast<std::size_t>(c.replicates);
        const int rep = static_cast<int>(cell % static_cast<std::size_t>(c.replicates));
        const double level = c.levels[li];
        const Seed s = rng::derive_seed(rng::derive_seed(c.seed, li), static_cast<std::uint64_t>(rep));
        auto& rows = per_cell[cell];
        auto add = [&](const std::string& q, double v) { rows.push_back({level, rep, q, v}); };

        const SampleMatrix x0 = sample_initial(family_member(c.family, level, d), c.n, rng::derive_seed(s, 1));
        const TrajectorySet trajs = simulate(c.model, x0, {0.0, c.dt}, rng::derive_seed(s, 2));
        const FisherReport fr = empirical_score_variance(c.model, trajs, c.estimator.degree);
        const double nd = static_cast<double>(c.n);
        add("fisher_diffusion_theoretical", fr.diffusion.theoretical / nd);
        add("fisher_diffusion_empirical", fr.diffusion.empirical / nd);
        for (const auto& [a, e] : fr.per_coefficient) {
            add("fisher_drift_theoretical" + alpha_label(a), e.theoretical / (nd * c.dt));
            add("fisher_drift_empirical" + alpha_label(a), e.empirical / (nd * c.dt));
        }
        if (c.estimate) {
            EstimatorConfig ec = c.estimator;
            ec.seed = rng::derive_seed(s, 4);
            const auto mle = mle_from_trajectories(trajs, ec.degree, ec.sigma2_floor);
            add("trajectories_drift_mae", drift_mae(c.model.potential, mle.potential, grid, opt));
            add("trajectories_diffusion_mae", diffusivity_mae(c.model.sigma2, mle.sigma2_hat));
            const auto series = shuffle_to_snapshots(trajs, rng::derive_seed(s, 3));
            const auto ap = appex_estimate(series, ec);
            add("marginals_drift_mae", drift_mae(c.model.potential, ap.potential, grid, opt));
            add("marginals_diffusion_mae", diffusivity_mae(c.model.sigma2, ap.sigma2_hat));
        }
        if (c.gap_resamples > 0) {
            const auto coupling = sinkhorn_coupling(trajs.positions[0], trajs.positions[1], c.model, c.dt,
                                                    c.estimator.sinkhorn);
            const auto gap = information_gap_estimate(c.model, trajs, coupling, c.gap_resamples, rng::derive_seed(s, 5),
                                                      c.estimator.degree);
            add("gap_diffusion", gap.diffusion.empirical / nd);
            for (const auto& [a, e] : gap.per_coefficient) {
                add("gap_drift" + alpha_label(a), e.empirical / (nd * c.dt));
            }
        }
    });

    SweepResult res;
    for (auto& rows : per_cell) {
        res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    }
    std::vector<std::string> quantities;
    std::map<std::string, std::map<double, std::vector<double>>> values;
    for (const auto& r : res.rows) {
        if (values.find(r.quantity) == values.end()) {
            quantities.push_back(r.quantity);
        }
        values[r.quantity][r.level].push_back(r.value);
    }
    for (const auto& q : quantities) {
        TrendSummary t;
        t.quantity = q;
        for (double level : c.levels) {
            const auto& v = values[q][level];
            t.levels.push_back(level);
            t.mean.push_back(mean_of(v));
            t.sd.push_back(sd_of(v));
        }
        res.trends.push_back(std::move(t));
    }
    return res;
}

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "level,replicate,quantity,value\n";
    for (const auto& r : rows) {
        // quantities with a multi-index contain commas
        const bool quote = r.quantity.find(',') != std::string::npos;
        out << io::format_double(r.level) << ',' << r.replicate << ',' << (quote ? "\"" : "") << r.quantity
            << (quote ? "\"" : "") << ',' << io::format_double(r.value) << '\n';
    }
    return out.str();
}

json to_json(const SweepResult& r) {
    json trends = json::array();
    for (const auto& t : r.trends) {
        trends.push_back({{"quantity", t.quantity}, {"levels", t.levels}, {"mean", t.mean}, {"sd", t.sd}});
    }
    return {{"trends", trends}};
}

const TrendSummary& find_trend(const SweepResult& r, const std::string& quantity) {
    for (const auto& t : r.trends) {
        if (t.quantity == quantity) {
            return t;
        }
    }
    throw InputError("sweep has no quantity '" + quantity + "'");
}

bool monotone_with_one_inversion(const TrendSummary& t, int direction) {
    require(direction == 1 || direction == -1, "direction must be +1 or -1");
    int inversions = 0;
    for (std::size_t i = 0; i + 1 < t.mean.size(); ++i) {
        const double step = direction * (t.mean[i + 1] - t.mean[i]);
        if (step >= 0.0) {
            continue;
        }
        ++inversions;
        if (inversions > 1 || -step > t.sd[i] + t.sd[i + 1]) {
            return false;
        }
    }
    return true;
}

bool flat_within(const TrendSummary& t, double ratio) {
    require(!t.mean.empty(), "empty trend");
    const auto [lo, hi] = std::minmax_element(t.mean.begin(), t.mean.end());
    return *hi <= ratio * *lo;
}

// ---------------------------------------------------------------- demonstrations

RescalingTestResult rescaling_test(const RescalingTestConfig& c) {
    c.model.validate();
    require(c.alpha > 0.0 && c.replicates >= 1 && c.n >= 2, "rescaling test needs alpha > 0, replicates and n >= 2");
    const LangevinModel scaled = rescaled_model(c.model, c.alpha);
    const int d = c.model.dimension();
    InitialDistribution init_a = UniformBox{d, 4.0};
    InitialDistribution init_b = UniformBox{d, 4.0};
    if (c.setting == Setting::Stationary) {
        // both models share the Gibbs law, so one tuned proposal serves both
        const double scale = tune_proposal_scale(c.model, rng::derive_seed(c.seed, 0x7E57u));
        init_a = GibbsOf{c.model, 5000, scale};
        init_b = GibbsOf{scaled, 5000, scale};
    }
    const auto times = c.schedule.resolve();
    RescalingTestResult res;
    res.p_values.resize(static_cast<std::size_t>(c.replicates));
    parallel_for(static_cast<std::size_t>(c.replicates), [&](std::size_t r) {
        const Seed s = rng::derive_seed(c.seed, r);
        const SimulateOptions opt{c.schedule.substeps, 1e6};
        const auto ta = simulate(c.model, sample_initial(init_a, c.n, rng::derive_seed(s, 1)), times,
                                 rng::derive_seed(s, 2), opt);
        const auto tb = simulate(scaled, sample_initial(init_b, c.n, rng::derive_seed(s, 3)), times,
                                 rng::derive_seed(s, 4), opt);
        res.p_values[r] = energy_test(ta.positions.back(), tb.positions.back(), c.permutations, rng::derive_seed(s, 5))
                              .p_value;
    });
    int rejected = 0;
    for (double p : res.p_values) {
        rejected += p < c.level ? 1 : 0;
    }
    res.rejection_rate = static_cast<double>(rejected) / static_cast<double>(c.replicates);
    return res;
}

RegimeShiftDemo regime_shift_demo(const LangevinModel& model, double alpha, std::size_t n, double dt, int steps,
                                  Seed seed) {
    model.validate();
    require(steps >= 2, "each regime needs at least two steps");
    RegimeShiftDemo demo;
    demo.first = model;
    demo.second = rescaled_model(model, alpha);
    const int d = model.dimension();
    const auto x0 = sample_initial(UniformBox{d, 4.0}, n, rng::derive_seed(seed, 1));
    const auto times = uniform_times(dt, steps);
    const auto a = simulate(demo.first, x0, times, rng::derive_seed(seed, 2));
    const auto b = simulate(demo.second, a.positions.back(), times, rng::derive_seed(seed, 3));
    TrajectorySet joined;
    joined.times = a.times;
    joined.positions = a.positions;
    const double t1 = a.times.back();
    for (std::size_t t = 1; t < b.num_times(); ++t) {
        joined.times.push_back(t1 + b.times[t]);
        joined.positions.push_back(b.positions[t]);
    }
    demo.series = shuffle_to_snapshots(joined, rng::derive_seed(seed, 4));
    demo.regimes.boundaries = {0.0, t1, joined.times.back()};
    return demo;
}

EvolvingEquilibriumDemo evolving_equilibrium_demo(std::size_t n, double t_end, int n_obs, int substeps, Seed seed,
                                                  int permutations) {
    require(n >= 2 && t_end > 0.0 && n_obs >= 1 && substeps >= 1, "invalid evolving-equilibrium settings");
    EvolvingEquilibriumDemo demo;
    const double h = t_end / (static_cast<double>(n_obs) * substeps);
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(nn);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(nn);
    auto record = [&](double t) {
        demo.times.push_back(t);
        demo.brownian.times.push_back(t);
        demo.shrinking.times.push_back(t);
        demo.brownian.samples.push_back(SampleMatrix(x));
        demo.shrinking.samples.push_back(SampleMatrix(y));
    };
    record(0.0);
    std::uint64_t step = 0;
    for (int k = 1; k <= n_obs; ++k) {
        for (int s = 0; s < substeps; ++s, ++step) {
            const double t = static_cast<double>(step) * h;
            for (Eigen::Index p = 0; p < nn; ++p) {
                const double zx = rng::normal_at(seed, rng::Domain::Increment, static_cast<std::uint64_t>(p), step, 0);
                const double zy = rng::normal_at(seed, rng::Domain::Increment, static_cast<std::uint64_t>(p), step, 1);
                x[p] += std::sqrt(h) * zx;
                const double drift = t > 0.0 ? -y[p] / t : 0.0;
                y[p] += drift * h + std::sqrt(3.0 * h) * zy;
            }
        }
        record(static_cast<double>(k) * t_end / n_obs);
    }
    for (std::size_t t = 0; t < demo.times.size(); ++t) {
        const auto& a = demo.brownian.samples[t];
        const auto& b = demo.shrinking.samples[t];
        demo.variance_brownian.push_back((a.array() - a.mean()).square().sum() / static_cast<double>(n - 1));
        demo.variance_shrinking.push_back((b.array() - b.mean()).square().sum() / static_cast<double>(n - 1));
        if (t > 0) {
            demo.p_values.push_back(energy_test(a, b, permutations, rng::derive_seed(seed, t)).p_value);
        }
    }
    return demo;
}

// ---------------------------------------------------------------- reproduction

std::vector<std::string> reproducible_experiments() {
    return {"transient_vs_stationary", "spread_uniform",       "spread_rademacher",
            "fisher_drift",            "fisher_diffusion",     "rescaling_test",
            "regime_shift",            "evolving_equilibrium", "gibbs_stationarity"};
}

void write_manifest(const std::filesystem::path& dir, const json& header,
                    const std::vector<std::filesystem::path>& files) {
    json list = json::array();
    for (const auto& f : files) {
        const std::string content = io::read_file(dir / f);
        list.push_back({{"path", f.generic_string()}, {"sha256", io::sha256_hex(content)}, {"bytes", content.size()}});
    }
    json m = header;
    m["files"] = list;
    io::write_json_file(dir / "manifest.json", m);
}

namespace {

struct Output {
    std::filesystem::path dir;
    std::vector<std::filesystem::path> files;

    void text(const std::string& name, const std::string& content) {
        io::write_file_atomic(dir / name, content);
        files.emplace_back(name);
    }
    void json_file(const std::string& name, const json& j) {
        io::write_json_file(dir / name, j);
        files.emplace_back(name);
    }
};

json sweep_experiment(Output& out, const LangevinModel& model, InitFamily family, bool quick, Seed seed) {
    SweepConfig c;
    c.model = model;
    c.family = family;
    c.levels = quick ? std::vector<double>{1, 4, 7} : std::vector<double>{1, 2, 3, 4, 5, 6, 7};
    c.replicates = quick ? 1 : 5;
    c.seed = seed;
    c.metrics.gibbs_points = 0;
    const auto res = run_sweep(c);
    out.text("sweep.csv", sweep_rows_csv(res.rows));
    json summary = to_json(res);
    summary["config"] = to_json(c);
    summary["flags"] = {
        {"trajectories_drift_mae_nonincreasing",
         monotone_with_one_inversion(find_trend(res, "trajectories_drift_mae"), -1)},
        {"marginals_diffusion_mae_nondecreasing",
         monotone_with_one_inversion(find_trend(res, "marginals_diffusion_mae"), +1)},
        {"marginals_diffusion_mae_flat_2x", flat_within(find_trend(res, "marginals_diffusion_mae"), 2.0)},
        {"fisher_diffusion_theoretical_constant", flat_within(find_trend(res, "fisher_diffusion_theoretical"), 1.0)}};
    out.json_file("sweep.json", summary);
    return summary;
}

} // namespace

json reproduce(const std::string& name, const std::filesystem::path& out_dir, bool quick) {
    Output out{out_dir, {}};
    json summary;
    const Seed seed = 20240601;

    if (name == "transient_vs_stationary") {
        std::vector<MetricRow> rows;
        json cells = json::array();
        for (auto kind : {NamedKind::Quadratic, NamedKind::StyblinskiTang}) {
            for (double s2 : {0.2, 0.4}) {
                for (auto setting : {Setting::Transient, Setting::Stationary}) {
                    ExperimentConfig c;
                    c.model = LangevinModel{make_named(kind), s2};
                    c.setting = setting;
                    c.init = setting == Setting::Transient ? InitialDistribution(UniformBox{2, 4.0})
                                                           : InitialDistribution(GibbsOf{c.model, 5000, std::nullopt});
                    c.replicates = quick ? 1 : 5;
                    c.seed = rng::derive_seed(seed, cells.size());
                    c.name = model_id(c.model) + "_" + to_string(setting);
                    const auto cell = run_cell(c);
                    rows.insert(rows.end(), cell.rows.begin(), cell.rows.end());
                    json ests = json::array();
                    for (const auto& e : cell.estimates) {
                        ests.push_back(io::to_json(e));
                    }
                    cells.push_back({{"config", to_json(c)}, {"estimates", ests}});
                }
            }
        }
        const auto sums = summarize(rows);
        out.text("metrics.csv", metric_rows_csv(rows));
        out.text("summary.csv", summary_csv(sums));
        out.json_file("results.json", {{"cells", cells}});
        json s = json::array();
        for (const auto& r : sums) {
            s.push_back(to_json(r));
        }
        summary = {{"summary", s}};
    } else if (name == "spread_uniform") {
        summary = sweep_experiment(out, LangevinModel{make_named(NamedKind::Quadratic), 0.2}, InitFamily::Uniform, quick,
                                   seed);
    } else if (name == "spread_rademacher") {
        summary = sweep_experiment(out, LangevinModel{make_named(NamedKind::Quadratic), 0.2}, InitFamily::Rademacher,
                                   quick, seed);
    } else if (name == "fisher_drift" || name == "fisher_diffusion") {
        const bool drift = name == "fisher_drift";
        json rows = json::array();
        std::ostringstream csv;
        csv << "sigma2,init,level,quantity,theoretical,empirical,stderr\n";
        const std::vector<double> sigmas = drift ? std::vector<double>{0.2} : std::vector<double>{0.2, 1.0};
        std::vector<std::pair<InitFamily, double>> inits;
        if (drift) {
            inits = {{InitFamily::Uniform, 1}, {InitFamily::Uniform, 2}, {InitFamily::Uniform, 4}};
        } else {
            inits = {{InitFamily::Dirac, 0}, {InitFamily::Uniform, 1}, {InitFamily::Uniform, 4}};
        }
        const std::size_t n = quick ? 10000 : 100000;
        for (double s2 : sigmas) {
            const LangevinModel model{make_named(NamedKind::Quadratic), s2};
            for (std::size_t k = 0; k < inits.size(); ++k) {
                const auto [fam, level] = inits[k];
                const Seed s = rng::derive_seed(seed, k + 10 * static_cast<std::size_t>(s2 * 10));
                const auto x0 = sample_initial(family_member(fam, level, 2), n, rng::derive_seed(s, 1));
                const auto trajs = simulate(model, x0, {0.0, 1e-3}, rng::derive_seed(s, 2));
                const auto rep = empirical_score_variance(model, trajs, 2);
                json r = io::to_json(rep);
                r["init"] = to_string(fam);
                r["level"] = level;
                rows.push_back(r);
                auto line = [&](const std::string& q, const InformationEntry& e, double norm) {
                    csv << io::format_double(s2) << ',' << to_string(fam) << ',' << io::format_double(level) << ','
                        << q << ',' << io::format_double(e.theoretical / norm) << ','
                        << io::format_double(e.empirical / norm) << ',' << io::format_double(e.stderr / norm) << '\n';
                };
                line("diffusion_per_trajectory", rep.diffusion, static_cast<double>(n));
                for (const auto& [a, e] : rep.per_coefficient) {
                    std::string label = alpha_label(a);
                    std::replace(label.begin(), label.end(), ',', ';');
                    line("drift_per_n_dt" + label, e, static_cast<double>(n) * 1e-3);
                }
            }
        }
        out.text("fisher.csv", csv.str());
        out.json_file("fisher.json", {{"reports", rows}});
        summary = {{"reports", rows.size()}};
    } else if (name == "rescaling_test") {
        json res = json::object();
        for (auto setting : {Setting::Stationary, Setting::Transient}) {
            RescalingTestConfig c;
            c.setting = setting;
            c.replicates = quick ? 10 : 100;
            c.seed = rng::derive_seed(seed, setting == Setting::Stationary ? 1 : 2);
            const auto r = rescaling_test(c);
            res[to_string(setting)] = {{"rejection_rate", r.rejection_rate}, {"p_values", r.p_values},
                                       {"alpha", c.alpha},                   {"n", c.n},
                                       {"replicates", c.replicates},         {"level", c.level}};
        }
        out.json_file("rescaling_test.json", res);
        summary = res;
        for (auto& [k, v] : summary.items()) {
            v.erase("p_values");
        }
    } else if (name == "regime_shift") {
        const auto demo =
            regime_shift_demo(LangevinModel{make_named(NamedKind::Quadratic), 0.2}, 2.0, quick ? 300 : 1000, 0.01, 5, seed);
        EstimatorConfig ec;
        ec.seed = seed;
        const auto results = estimate_piecewise(demo.series, demo.regimes, ec);
        json regimes = json::array();
        for (const auto& r : results) {
            regimes.push_back(io::to_json(r));
        }
        out.text("snapshots.csv", io::snapshots_to_csv(demo.series));
        summary = {{"boundaries", demo.regimes.boundaries},
                   {"true_sigma2", {demo.first.sigma2, demo.second.sigma2}},
                   {"sigma2_ratio", results.at(1).sigma2_hat / results.at(0).sigma2_hat}};
        out.json_file("regimes.json", {{"summary", summary}, {"estimates", regimes}});
    } else if (name == "evolving_equilibrium") {
        const auto demo = evolving_equilibrium_demo(quick ? 500 : 2000, 1.0, 10, 100, seed);
        out.text("brownian.csv", io::snapshots_to_csv(demo.brownian));
        out.text("shrinking.csv", io::snapshots_to_csv(demo.shrinking));
        summary = {{"times", demo.times},
                   {"variance_brownian", demo.variance_brownian},
                   {"variance_shrinking", demo.variance_shrinking},
                   {"p_values", demo.p_values}};
        out.json_file("evolving_equilibrium.json", summary);
    } else if (name == "gibbs_stationarity") {
        const LangevinModel model{make_named(NamedKind::Quadratic), 0.2};
        json rows = json::array();
        for (int res : {32, 64, 128, 256}) {
            const auto g = gibbs_grid_density(model, 2.0, res);
            rows.push_back({{"resolution", res},
                            {"residual_fourth_order", fp_residual(model, g, StencilOrder::Fourth)},
                            {"residual_second_order", fp_residual(model, g, StencilOrder::Second)}});
        }
        summary = {{"rows", rows}};
        out.json_file("fp_residual.json", summary);
    } else {
        std::string names;
        for (const auto& n : reproducible_experiments()) {
            names += (names.empty() ? "" : ", ") + n;
        }
        throw InputError("unknown experiment '" + name + "' (available: " + names + ")");
    }
    write_manifest(out_dir, {{"experiment", name}, {"quick", quick}, {"seed", seed}}, out.files);
    return summary;
}

} // namespace sdeid::experiment
