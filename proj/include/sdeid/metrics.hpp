#ifndef SDEID_METRICS_HPP
#define SDEID_METRICS_HPP

#include "sdeid/sim.hpp"

namespace sdeid {

/// Tensor-product grid on [-half, half]^d, last coordinate fastest.
SampleMatrix grid_points(double box_half_length, int n_per_axis, int d = 2);

struct MetricOptions {
    /// Mean absolute componentwise error instead of the mean Euclidean error norm.
    bool componentwise = false;
};

/**
 * Mean over points of |grad Psi_est - grad Psi_true|, divided by the mean of
 * |grad Psi_true|. With `componentwise` both means use the L1 norm divided by d.
 * Throws InputError when the true field vanishes at every point.
 */
double drift_mae(const Potential& truth, const Potential& estimate, const SampleMatrix& points,
                 const MetricOptions& options = {});

double diffusivity_mae(double true_sigma2, double est_sigma2);

struct CosineReport {
    double mean = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0; ///< points where either gradient has norm < 1e-12
};

/// Average pointwise cosine between the two gradient fields. Throws when every point is skipped.
CosineReport cosine_similarity(const Potential& truth, const Potential& estimate, const SampleMatrix& points);

/// n Metropolis draws from the model's Gibbs law (proposal scale auto-tuned).
SampleMatrix gibbs_eval_points(const LangevinModel& model, std::size_t n, Seed seed, int steps = 5000);

} // namespace sdeid

#endif
