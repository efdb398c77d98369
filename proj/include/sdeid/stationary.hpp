#ifndef SDEID_STATIONARY_HPP
#define SDEID_STATIONARY_HPP

#include "sdeid/sim.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sdeid {

/// Unnormalized log of the stationary density exp(-2 Psi / sigma2).
double gibbs_log_density(const LangevinModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

struct MetropolisResult {
    SampleMatrix samples;
    double acceptance_rate = 0.0;
    double proposal_scale = 0.0;
    std::vector<std::string> warnings;
};

/**
 * @brief n independent random-walk Metropolis chains targeting the Gibbs law; returns final states.
 *
 * Proposals are x + proposal_scale * z with z standard normal. In one or two
 * dimensions chains start from a draw of the Gibbs density tabulated on
 * [-8, 8]^d, which keeps chains out of wells the walk cannot leave; in higher
 * dimensions they start uniformly on [-4, 4]^d. A warning is recorded when the
 * mean acceptance rate leaves [0.05, 0.95].
 */
MetropolisResult metropolis_sample(const LangevinModel& model, std::size_t n, int steps, double proposal_scale, Seed seed);

/// Proposal scale whose acceptance rate is close to `target`, from short adaptive pilot chains.
double tune_proposal_scale(const LangevinModel& model, Seed seed, double target = 0.3);

/// Final state of `n_steps` Euler-Maruyama steps of size dt started at `init`.
SampleMatrix langevin_burn_in(const LangevinModel& model, const SampleMatrix& init, int n_steps, double dt, Seed seed);

/// (alpha Psi, alpha sigma2): same stationary law, time sped up by alpha.
LangevinModel rescaled_model(const LangevinModel& model, double alpha);

/**
 * @brief Density tabulated on the nodes of a regular grid.
 *
 * Node (i_0, ..., i_{d-1}) sits at lower + i * spacing and is stored
 * row-major with the last axis fastest. Normalized means
 * sum(values) * cell_volume = 1.
 */
struct GridDensity {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int resolution = 0;
    std::vector<double> values;

    int dimension() const { return static_cast<int>(lower.size()); }
    double spacing(int axis) const;
    double cell_volume() const;
    std::size_t num_nodes() const;
    Eigen::VectorXd node(std::size_t flat) const;
    double mass() const;
    void normalize();
};

/// Tabulates `density(x)` on the grid, then normalizes.
GridDensity tabulate_density(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int resolution,
                             const std::function<double(const Eigen::VectorXd&)>& density);

/// Normalized Gibbs density of the model on [-half, half]^d.
GridDensity gibbs_grid_density(const LangevinModel& model, double half, int resolution);

enum class StencilOrder { Second = 2, Fourth = 4 };

/**
 * @brief Discrete div(p grad Psi) + (sigma2 / 2) Laplacian(p) on interior nodes.
 *
 * The flux p grad Psi uses the exact gradient at the nodes; both derivatives
 * use central differences of the requested order. Interior means one node
 * of margin per side for second order and two for fourth order. The result is
 * linear in (grad Psi, sigma2) for a fixed density.
 */
std::vector<double> fp_operator(const Potential& potential, double sigma2, const GridDensity& density,
                                StencilOrder order = StencilOrder::Fourth);

/// L2 norm, sqrt(sum r^2 * cell_volume), of fp_operator over interior nodes.
double fp_residual(const LangevinModel& model, const GridDensity& density, StencilOrder order = StencilOrder::Fourth);

/// V-statistic energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'|; exactly 0 for identical inputs.
double energy_distance(const SampleMatrix& x, const SampleMatrix& y);

struct TwoSampleResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Energy-distance permutation test with p = (1 + #{perm >= observed}) / (permutations + 1).
TwoSampleResult energy_test(const SampleMatrix& x, const SampleMatrix& y, int permutations, Seed seed);

struct StationarityRecord {
    double t_i = 0.0;
    double t_j = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Energy test between each consecutive pair of snapshots. Rejects snapshots with fewer than 10 samples.
std::vector<StationarityRecord> stationarity_test(const SnapshotSeries& series, int permutations = 200, Seed seed = 0);

} // namespace sdeid

#endif
