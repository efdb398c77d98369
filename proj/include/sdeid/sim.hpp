#ifndef SDEID_SIM_HPP
#define SDEID_SIM_HPP

#include "sdeid/potentials.hpp"
#include "sdeid/types.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace sdeid {

/**
 * @brief dX = -grad Psi(X) dt + sigma dW with isotropic noise of diffusivity sigma2.
 *
 * sigma2 = 0 is accepted by the simulator (deterministic flow) but rejected by
 * everything that treats the model as an estimand.
 */
struct LangevinModel {
    Potential potential;
    double sigma2 = 1.0;

    int dimension() const { return potential_dimension(potential); }
    /// Throws InputError unless sigma2 > 0 (or >= 0 when allow_zero_noise).
    void validate(bool allow_zero_noise = false) const;
};

struct UniformBox {
    int dimension = 2;
    double half_length = 4.0;
};

struct Gaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Each coordinate independently +-level with probability 1/2.
struct Rademacher {
    int dimension = 2;
    double level = 1.0;
};

struct Dirac {
    Eigen::VectorXd point;
};

/// Stationary law of `model`, drawn by random-walk Metropolis.
struct GibbsOf {
    LangevinModel model;
    int steps = 5000;
    std::optional<double> proposal_scale; ///< tuned automatically when empty
};

/// Final state of `steps` Euler-Maruyama steps started from Unif([-start_half_length, start_half_length]^d).
struct LangevinBurnIn {
    LangevinModel model;
    int steps = 100;
    double dt = 0.01;
    double start_half_length = 4.0;
};

using InitialDistribution = std::variant<UniformBox, Gaussian, Rademacher, Dirac, GibbsOf, LangevinBurnIn>;

int distribution_dimension(const InitialDistribution& dist);

/// True for the initial laws that target the stationary distribution.
bool is_stationary_init(const InitialDistribution& dist);

/// Paths sampled on a shared time grid; positions[t] holds every path at times[t].
struct TrajectorySet {
    std::vector<double> times;
    std::vector<SampleMatrix> positions;
    Seed seed = 0;

    std::size_t num_paths() const { return positions.empty() ? 0 : static_cast<std::size_t>(positions.front().rows()); }
    std::size_t num_times() const { return times.size(); }
    int dimension() const { return positions.empty() ? 0 : static_cast<int>(positions.front().cols()); }
    Eigen::VectorXd state(std::size_t path, std::size_t time_index) const;

    /// Throws InputError when times are not strictly increasing or shapes disagree.
    void validate() const;
};

/// Marginal sample clouds at increasing times. Row order within a snapshot carries no pairing.
struct SnapshotSeries {
    std::vector<double> times;
    std::vector<SampleMatrix> samples;

    std::size_t size() const { return times.size(); }
    int dimension() const { return samples.empty() ? 0 : static_cast<int>(samples.front().cols()); }
    void validate() const;
    /// Snapshots with index in [first, last].
    SnapshotSeries slice(std::size_t first, std::size_t last) const;
};

/// n i.i.d. draws, deterministic in seed.
SampleMatrix sample_initial(const InitialDistribution& dist, std::size_t n, Seed seed);

/// x - grad Psi(x) dt + sqrt(sigma2 dt) z.
Eigen::VectorXd euler_maruyama_step(const LangevinModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double dt,
                                    const Eigen::Ref<const Eigen::VectorXd>& z);

struct SimulateOptions {
    /// Euler-Maruyama steps per observation interval.
    int substeps = 1;
    /// Any |coordinate| above this aborts the run.
    double divergence_bound = 1e6;
};

/**
 * @brief Euler-Maruyama paths observed at `times` (times[0] must be 0).
 *
 * The normal vector for path p at global step s is rng::normals_at(seed,
 * Increment, p, s, .), so the output is bit-identical for any thread count.
 * Throws NumericalError naming the path when a state diverges.
 */
TrajectorySet simulate(const LangevinModel& model, const SampleMatrix& init, const std::vector<double>& times, Seed seed,
                       const SimulateOptions& options = {});

/// Times 0, dt, ..., n_steps * dt.
std::vector<double> uniform_times(double dt, int n_steps);

/**
 * @brief Destroys the pairing between times by permuting rows independently at each time.
 *
 * `keep` selects time indices; all times are kept when it is empty.
 */
SnapshotSeries shuffle_to_snapshots(const TrajectorySet& trajs, Seed seed, const std::vector<std::size_t>& keep = {});

} // namespace sdeid

#endif
