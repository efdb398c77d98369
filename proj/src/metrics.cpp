#include "sdeid/metrics.hpp"
#include "sdeid/stationary.hpp"

#include <cmath>

namespace sdeid {

SampleMatrix grid_points(double box_half_length, int n_per_axis, int d) {
    require(n_per_axis >= 2, "grid needs at least two points per axis");
    require(box_half_length > 0.0 && d >= 1, "grid needs a positive half-length and dimension");
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) {
        total *= static_cast<std::size_t>(n_per_axis);
    }
    const double h = 2.0 * box_half_length / (n_per_axis - 1);
    SampleMatrix pts(static_cast<Eigen::Index>(total), d);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rest = k;
        for (int i = d - 1; i >= 0; --i) {
            const auto idx = rest % static_cast<std::size_t>(n_per_axis);
            rest /= static_cast<std::size_t>(n_per_axis);
            // pin the last node to +half so the endpoint is exact
            pts(static_cast<Eigen::Index>(k), i) =
                idx + 1 == static_cast<std::size_t>(n_per_axis) ? box_half_length : -box_half_length + h * idx;
        }
    }
    return pts;
}

double drift_mae(const Potential& truth, const Potential& estimate, const SampleMatrix& points,
                 const MetricOptions& options) {
    require(points.rows() >= 1, "no evaluation points");
    const SampleMatrix gt = eval_gradients(truth, points);
    const SampleMatrix ge = eval_gradients(estimate, points);
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index n = 0; n < points.rows(); ++n) {
        if (options.componentwise) {
            num += (ge.row(n) - gt.row(n)).cwiseAbs().sum();
            den += gt.row(n).cwiseAbs().sum();
        } else {
            num += (ge.row(n) - gt.row(n)).norm();
            den += gt.row(n).norm();
        }
    }
    if (!(den > 0.0)) {
        throw InputError("true drift vanishes at every evaluation point; normalized MAE undefined");
    }
    return num / den;
}

double diffusivity_mae(double true_sigma2, double est_sigma2) { return std::abs(est_sigma2 - true_sigma2); }

CosineReport cosine_similarity(const Potential& truth, const Potential& estimate, const SampleMatrix& points) {
    require(points.rows() >= 1, "no evaluation points");
    const SampleMatrix gt = eval_gradients(truth, points);
    const SampleMatrix ge = eval_gradients(estimate, points);
    CosineReport rep;
    double acc = 0.0;
    for (Eigen::Index n = 0; n < points.rows(); ++n) {
        const double a = gt.row(n).norm();
        const double b = ge.row(n).norm();
        if (a < 1e-12 || b < 1e-12) {
            ++rep.skipped;
            continue;
        }
        acc += gt.row(n).dot(ge.row(n)) / (a * b);
        ++rep.used;
    }
    if (rep.used == 0) {
        throw InputError("cosine similarity undefined: every point has a vanishing gradient");
    }
    rep.mean = acc / static_cast<double>(rep.used);
    return rep;
}

SampleMatrix gibbs_eval_points(const LangevinModel& model, std::size_t n, Seed seed, int steps) {
    const double scale = tune_proposal_scale(model, seed);
    return metropolis_sample(model, n, steps, scale, seed).samples;
}

} // namespace sdeid
