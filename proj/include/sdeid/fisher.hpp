#ifndef SDEID_FISHER_HPP
#define SDEID_FISHER_HPP

#include "sdeid/estimate.hpp"

#include <map>

/**
 * @file fisher.hpp
 *
 * @brief Per-parameter Fisher information of one Euler-Maruyama step under the
 * linearized Gaussian transition density, in theory and by Monte Carlo.
 *
 * Drift parameters are the monomial coefficients theta_alpha of
 * Psi = sum_alpha theta_alpha x^alpha; the diffusion parameter is sigma2.
 * All information values are totals over the n trajectories of a data set.
 */

namespace sdeid {

struct InformationEntry {
    double theoretical = 0.0;
    double empirical = 0.0;
    double stderr = 0.0; ///< jackknife standard error of `empirical`
};

struct FisherReport {
    std::map<MultiIndex, InformationEntry> per_coefficient;
    InformationEntry diffusion;
    std::size_t n = 0;
    double dt = 0.0;
    int d = 0;
    double sigma2 = 0.0;
};

/**
 * n * dt / sigma2 * sum_i alpha_i^2 * mean_j x_j^(2 alpha - 2 e_i) for every
 * alpha with 1 <= |alpha| <= degree, where the mean runs over the rows of
 * init_samples. A degree of 0 means the model's own polynomial degree (4 for
 * non-polynomial potentials).
 */
std::map<MultiIndex, double> drift_fisher_theoretical(const LangevinModel& model, const SampleMatrix& init_samples,
                                                      double dt, int degree = 0);

/// n * d / (2 sigma2^2).
double diffusion_fisher_theoretical(int d, double sigma2, std::size_t n);

/**
 * @brief Sample variance of the per-trajectory scores, times n.
 *
 * With r = x_1 - x_0 + dt grad Psi(x_0) the drift score of theta_alpha is
 * -(1/sigma2) r . grad x^alpha(x_0) and the diffusion score is
 * -d / (2 sigma2) + |r|^2 / (2 sigma2^2 dt). `trajs` must hold exactly two
 * times and `model` should be the generating model. The theoretical fields
 * are filled from the two formulas above with init_samples = trajs at t = 0.
 */
FisherReport empirical_score_variance(const LangevinModel& model, const TrajectorySet& trajs, int degree = 0);

struct GapReport {
    std::map<MultiIndex, InformationEntry> per_coefficient; ///< only `empirical` and `stderr` are set
    InformationEntry diffusion;
    int resamples = 0;
};

/**
 * @brief Spread of the total score over pairings drawn from a coupling.
 *
 * Draws n_resample one-to-one pairings between the t = 0 and t = 1 clouds of
 * `trajs`. Each draw visits the rows in a random order and picks a still free
 * column with probability proportional to the coupling weights (uniformly
 * among free columns if they carry no weight). Returns the across-draw
 * variance of the summed scores per parameter. This conditions on the computed
 * coupling, not on the marginals themselves, so it is a diagnostic of how much
 * information the unobserved pairing carries rather than a calibrated estimate.
 */
GapReport information_gap_estimate(const LangevinModel& model, const TrajectorySet& trajs, const Coupling& coupling,
                                   int n_resample, Seed seed, int degree = 0);

/// Unbiased sample variance with its jackknife standard error.
std::pair<double, double> variance_with_jackknife(const Eigen::Ref<const Eigen::VectorXd>& values);

} // namespace sdeid

#endif
