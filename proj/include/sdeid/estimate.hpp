#ifndef SDEID_ESTIMATE_HPP
#define SDEID_ESTIMATE_HPP

#include "sdeid/sim.hpp"

#include <optional>
#include <string>
#include <vector>

/**
 * @file estimate.hpp
 *
 * @brief Joint drift and diffusivity estimation under the linearized
 * (Euler-Maruyama) transition density
 *
 *     x' | x ~ N(x - dt grad Psi_theta(x), sigma2 dt I).
 *
 * Psi_theta is a polynomial whose gradient is linear in theta, so for fixed
 * pairings the drift maximum-likelihood problem is an exact weighted linear
 * least-squares problem and sigma2 has a closed form.
 */

namespace sdeid {

/// Transport plan between two sample clouds.
struct Coupling {
    Eigen::MatrixXd weights; ///< N0 x N1, non-negative
    Eigen::VectorXd row_marginal;
    Eigen::VectorXd col_marginal;
    bool converged = true;
    int iterations = 0;
    double marginal_violation = 0.0; ///< L1 distance of row and column sums to their marginals
};

/// Coupling with weight 1/N on (i, perm[i]).
Coupling permutation_coupling(const std::vector<std::size_t>& perm);

struct SinkhornConfig {
    double epsilon_scale = 1.0; ///< epsilon = epsilon_scale * sigma2_guess * dt
    int max_iter = 5000;
    double tol = 1e-4;          ///< L1 marginal violation of the row sums (columns are exact)
};

/**
 * @brief Entropic transport plan between uniform weights on x0 and x1.
 *
 * Cost C_ij = |x1_j - (x0_i - dt grad Psi_guess(x0_i))|^2 and regularization
 * epsilon = epsilon_scale * sigma2_guess * dt. Scaling iterations run in the
 * kernel domain and fold the scalings into log-domain potentials whenever they
 * grow large, so tiny epsilon neither underflows nor overflows. The
 * regularization is annealed geometrically from the largest cost down to
 * epsilon. Stops once the marginal violation drops below tol, otherwise returns the
 * last plan with converged = false. Column sums are exact after the final
 * update, so any remaining violation sits in the row sums.
 */
Coupling sinkhorn_coupling(const SampleMatrix& x0, const SampleMatrix& x1, const LangevinModel& model_guess, double dt,
                           const SinkhornConfig& config = {});

/// Same plan from a precomputed cost matrix.
Coupling sinkhorn_from_cost(const Eigen::MatrixXd& cost, double epsilon, int max_iter, double tol);


enum class DataSetting { Trajectories, Marginals };

std::string to_string(DataSetting s);

struct EstimationResult {
    PolynomialPotential potential{1, 1};
    double sigma2_hat = 0.0;
    int degree = 0;
    int iterations = 0;
    std::vector<double> loglik_trace;
    DataSetting data_setting = DataSetting::Trajectories;
    bool converged = false;
    std::vector<std::string> warnings;
    int null_space_dim = 0;

    LangevinModel model() const { return LangevinModel{potential, sigma2_hat}; }
    Eigen::VectorXd coefficients() const { return potential.basis_coefficients(); }
};

/// One group of transitions from `from` to `to` over a step dt.
struct TransitionBlock {
    SampleMatrix from;
    SampleMatrix to;
    double dt = 0.0;
    /// from.rows() x to.rows() pairing weights; empty means row i is paired with row i, weight 1.
    Eigen::MatrixXd weights;
};

struct MleFit {
    Eigen::VectorXd theta;
    double sigma2 = 0.0;      ///< unfloored
    double loglik = 0.0;      ///< weighted linearized log-likelihood at (theta, max(sigma2, floor))
    int rank = 0;
    int null_space_dim = 0;
};

/**
 * @brief Weighted maximum likelihood over transition blocks.
 *
 * Minimizes sum_blocks sum_ij w_ij dt |(to_j - from_i) / dt + grad Psi_theta(from_i)|^2,
 * which is the plain sum of squared drift residuals when all steps share one dt,
 * by column-equilibrated complete orthogonal decomposition (least-norm on rank
 * deficiency). Then sigma2 = sum w_ij |to_j - from_i + dt grad Psi(from_i)|^2 / dt
 * divided by d * sum w_ij.
 */
MleFit weighted_mle(const std::vector<TransitionBlock>& blocks, int degree, double sigma2_floor = 1e-8);

/// Consecutive-time transitions of every path, each with weight 1.
EstimationResult mle_from_trajectories(const TrajectorySet& trajs, int degree, double sigma2_floor = 1e-8);

/// Starting diffusivity for the alternating estimator, from squared displacements between consecutive snapshots.
enum class Sigma2Init {
    NearestNeighbour, ///< each later sample to its closest earlier sample
    AllPairs          ///< every pair, i.e. the independent coupling
};

std::string to_string(Sigma2Init s);
Sigma2Init sigma2_init_from_string(const std::string& s);

struct EstimatorConfig {
    int degree = 4;
    double tol = 1e-4; ///< max absolute coefficient change between outer iterations
    int max_outer = 30;
    SinkhornConfig sinkhorn;
    double sigma2_floor = 1e-8;
    Seed seed = 0;
    /// Level below which the stationarity test counts as evidence of transient data.
    double stationarity_level = 0.05;
    int stationarity_permutations = 200;
    Sigma2Init sigma2_init = Sigma2Init::NearestNeighbour;
};

/**
 * @brief Alternating trajectory inference and maximum likelihood from marginals.
 *
 * Starts at theta = 0 with sigma2 from squared displacements between
 * consecutive snapshots (see Sigma2Init), divided by d * dt. Each outer iteration computes an entropic coupling per
 * consecutive snapshot pair under the current model, then refits (theta,
 * sigma2) by weighted_mle with the coupling weights, pooling pairs equally.
 *
 * With lambda = epsilon_scale / 2 the two steps are block-coordinate ascent on
 *
 *     sum_pairs sum_ij pi_ij log p_theta(x1_j | x0_i) + lambda H(pi),
 *
 * which is what loglik_trace records; an iteration that lowers it by more than
 * 1e-6 is discarded and the loop stops at the previous iterate.
 */
EstimationResult appex_estimate(const SnapshotSeries& series, const EstimatorConfig& config = {});

/// Regime boundaries t_0 < t_1 < ... < t_R. Regime r holds the snapshots with t_r <= t < t_{r+1}; the last regime also holds t = t_R.
struct RegimeSpec {
    std::vector<double> boundaries;
};

/// Snapshot index ranges [first, last] for each regime. Throws when a regime has fewer than 2 snapshots.
std::vector<std::pair<std::size_t, std::size_t>> regime_ranges(const SnapshotSeries& series, const RegimeSpec& regimes);

/**
 * @brief Independent appex_estimate per regime.
 *
 * The transition that crosses a boundary is not used. Each result
 * carries a warning when the regime's first and last snapshots are not
 * distinguishable by stationarity_test at config.stationarity_level.
 */
std::vector<EstimationResult> estimate_piecewise(const SnapshotSeries& series, const RegimeSpec& regimes,
                                                 const EstimatorConfig& config = {});

/// Warning text when the first and last snapshots are not distinguishable by stationarity_test, empty otherwise.
std::optional<std::string> stationarity_warning(const SnapshotSeries& series, const EstimatorConfig& config);

} // namespace sdeid

#endif
