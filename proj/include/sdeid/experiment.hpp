#ifndef SDEID_EXPERIMENT_HPP
#define SDEID_EXPERIMENT_HPP

#include "sdeid/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

/**
 * @file experiment.hpp
 *
 * @brief Declarative experiments: dataset generation, estimation, evaluation
 * and the Fisher-information sweeps, shared by the command-line tool and the
 * acceptance checks.
 */

namespace sdeid::experiment {

using io::json;

enum class Setting { Transient, Stationary };

std::string to_string(Setting s);
Setting setting_from_string(const std::string& s);

/// Observation times. Explicit `times` win over (dt, n_steps).
struct Schedule {
    double dt = 0.01;
    int n_steps = 5;
    std::vector<double> times;
    /// Euler-Maruyama steps per observation interval.
    int substeps = 1;

    std::vector<double> resolve() const;
};

struct MetricsConfig {
    double grid_half_length = 5.0;
    int grid_per_axis = 50;
    std::size_t gibbs_points = 1000;
    int gibbs_steps = 5000;
    bool componentwise = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    LangevinModel model{NamedPotential{}, 0.2};
    InitialDistribution init = UniformBox{2, 4.0};
    Schedule schedule;
    Setting setting = Setting::Transient;
    std::size_t n_samples = 1000;
    int replicates = 5;
    Seed seed = 0;
    /// Keep the t = 0 snapshot in the marginal data.
    bool include_initial = true;
    EstimatorConfig estimator;
    MetricsConfig metrics;
    /// Relative to the output root unless absolute; defaults to `name`.
    std::string output_dir;

    /// Throws InputError, e.g. for a stationary setting with a non-stationary initial law.
    void validate() const;
};

ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& c);
json to_json(const MetricsConfig& m);
MetricsConfig metrics_config_from_json(const json& j);

/// Directory named by the SDEID_OUTPUT_ROOT environment variable, or the working directory.
std::filesystem::path output_root();
std::filesystem::path output_directory(const ExperimentConfig& c);

/// Seed of replicate r, and the per-stage seeds derived from it.
Seed replicate_seed(Seed base, int replicate);

struct Dataset {
    TrajectorySet trajectories;
    SnapshotSeries snapshots;
    Seed seed = 0;
};

/// Simulated trajectories and their shuffled marginals for one replicate.
Dataset generate_dataset(const ExperimentConfig& c, int replicate);

/// Estimator configuration with the replicate-specific seed filled in.
EstimatorConfig replicate_estimator(const ExperimentConfig& c, int replicate);

// ---------------------------------------------------------------- metrics

struct MetricRow {
    std::string model_id;
    std::string setting;
    std::string metric;
    double value = 0.0;
    int replicate = 0;
};

struct SummaryRow {
    std::string model_id;
    std::string setting;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0; ///< sample standard deviation, 0 for a single replicate
    std::size_t count = 0;
};

/// Points a run is evaluated on: the regular grid and draws from the true Gibbs law.
struct EvaluationPoints {
    SampleMatrix grid;
    SampleMatrix gibbs; ///< empty when metrics.gibbs_points == 0 or the law is not normalizable by the sampler
};

EvaluationPoints evaluation_points(const LangevinModel& truth, const MetricsConfig& m, Seed seed);

/**
 * Rows drift_mae_grid, drift_mae_gibbs, cosine_grid, cosine_gibbs and
 * diffusivity_mae (the Gibbs rows only when Gibbs points exist).
 */
std::vector<MetricRow> evaluate(const LangevinModel& truth, const LangevinModel& estimate, const EvaluationPoints& pts,
                                const MetricsConfig& m, const std::string& model_id, const std::string& setting,
                                int replicate);

/// Mean and sd per (model_id, setting, metric), in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows);

std::string metric_rows_csv(const std::vector<MetricRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);
json to_json(const MetricRow& r);
json to_json(const SummaryRow& r);

/// Short identifier such as "quadratic_s0.2".
std::string model_id(const LangevinModel& m);

struct CellResult {
    std::vector<Dataset> datasets;
    std::vector<EstimationResult> estimates;
    std::vector<MetricRow> rows;
};

/// Generates every replicate, estimates from the marginals and evaluates against the truth.
CellResult run_cell(const ExperimentConfig& c);

// ---------------------------------------------------------------- sweeps

enum class InitFamily { Uniform, Rademacher, Gaussian, Dirac };

std::string to_string(InitFamily f);
InitFamily init_family_from_string(const std::string& s);

/// Family member at `level`: half-length, Rademacher level, Gaussian variance, or Dirac coordinate.
InitialDistribution family_member(InitFamily f, double level, int d);

struct SweepConfig {
    LangevinModel model{NamedPotential{}, 0.2};
    InitFamily family = InitFamily::Uniform;
    std::vector<double> levels{1, 2, 3, 4, 5, 6, 7};
    std::size_t n = 1000;
    double dt = 0.001;
    int replicates = 5;
    Seed seed = 0;
    /// Also estimate from trajectories (least squares) and from marginals (alternating estimator).
    bool estimate = true;
    /// Pairings drawn for the information-gap diagnostic; 0 skips it.
    int gap_resamples = 0;
    EstimatorConfig estimator;
    MetricsConfig metrics;
};

SweepConfig sweep_config_from_json(const json& j);
json to_json(const SweepConfig& c);

/// One value of a sweep, tidy format.
struct SweepRow {
    double level = 0.0;
    int replicate = 0;
    std::string quantity;
    double value = 0.0;
};

struct TrendSummary {
    std::string quantity;
    std::vector<double> levels;
    std::vector<double> mean;
    std::vector<double> sd;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<TrendSummary> trends;
};

/**
 * For each level and replicate: one Euler-Maruyama step of n paths from the
 * family member, the Fisher report at the true model, and (optionally) the
 * drift and diffusivity errors from trajectories and from marginals.
 */
SweepResult run_sweep(const SweepConfig& c);

std::string sweep_rows_csv(const std::vector<SweepRow>& rows);
json to_json(const SweepResult& r);
const TrendSummary& find_trend(const SweepResult& r, const std::string& quantity);

/**
 * True when the means never move against `direction` (-1 nonincreasing,
 * +1 nondecreasing) except for at most one step whose size is within the sum
 * of the two standard deviations.
 */
bool monotone_with_one_inversion(const TrendSummary& t, int direction);

/// max(mean) <= ratio * min(mean).
bool flat_within(const TrendSummary& t, double ratio);

// ---------------------------------------------------------------- demonstrations

struct RescalingTestConfig {
    LangevinModel model{NamedPotential{}, 0.2};
    double alpha = 10.0;
    Setting setting = Setting::Stationary;
    std::size_t n = 1000;
    Schedule schedule{0.01, 5, {}, 10};
    int replicates = 100;
    int permutations = 200;
    double level = 0.05;
    Seed seed = 0;
};

struct RescalingTestResult {
    std::vector<double> p_values;
    double rejection_rate = 0.0;
};

/**
 * Simulates the model and rescaled_model(model, alpha) from their common
 * stationary law (or both from Unif([-4,4]^2) in the transient setting) with
 * independent seeds, and applies the energy two-sample test to the final
 * snapshots of the two data sets.
 */
RescalingTestResult rescaling_test(const RescalingTestConfig& c);

struct RegimeShiftDemo {
    SnapshotSeries series;
    RegimeSpec regimes;
    LangevinModel first{NamedPotential{}, 0.2};
    LangevinModel second{NamedPotential{}, 0.2};
};

/// n paths from Unif([-4,4]^d): `steps` steps under `model`, then `steps` under rescaled_model(model, alpha).
RegimeShiftDemo regime_shift_demo(const LangevinModel& model, double alpha, std::size_t n, double dt, int steps,
                                  Seed seed);

struct EvolvingEquilibriumDemo {
    std::vector<double> times;
    SnapshotSeries brownian;  ///< dX = dW from 0
    SnapshotSeries shrinking; ///< dY = -Y / t dt + sqrt(3) dW from 0
    std::vector<double> variance_brownian;
    std::vector<double> variance_shrinking;
    std::vector<double> p_values; ///< energy test between the two at each positive time
};

/**
 * Two one-dimensional processes with identical marginals N(0, t) but different
 * dynamics, observed at `n_obs` equally spaced times up to t_end. The
 * time-dependent drift is integrated with `substeps` Euler-Maruyama steps per
 * interval; the singular first step uses zero drift.
 */
EvolvingEquilibriumDemo evolving_equilibrium_demo(std::size_t n, double t_end, int n_obs, int substeps, Seed seed,
                                                  int permutations = 200);

/// Names accepted by `reproduce`.
std::vector<std::string> reproducible_experiments();

/**
 * Runs a named desk-scale experiment, writes its JSON and CSV outputs under
 * `out_dir` and returns a summary. `quick` cuts replicates for smoke runs.
 */
json reproduce(const std::string& name, const std::filesystem::path& out_dir, bool quick);

/// Writes manifest.json listing every file with its SHA-256 and size.
void write_manifest(const std::filesystem::path& dir, const json& header, const std::vector<std::filesystem::path>& files);

} // namespace sdeid::experiment

#endif
