#include "sdeid/fisher.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"

#include <algorithm>
#include <cmath>

namespace sdeid {

namespace {

int resolve_degree(const LangevinModel& model, int degree) {
    require(degree >= 0, "degree must be non-negative");
    if (degree > 0) {
        return degree;
    }
    PolynomialPotential poly(1, 1);
    return as_polynomial(model.potential, &poly) ? poly.degree() : 4;
}

// Per-trajectory scores: column m < M is the drift score of the m-th multi-index, column M the diffusion score.
Eigen::MatrixXd trajectory_scores(const LangevinModel& model, const SampleMatrix& x0, const SampleMatrix& x1,
                                  double dt, int k) {
    const int d = static_cast<int>(x0.cols());
    const double s2 = model.sigma2;
    const auto m = static_cast<Eigen::Index>(basis_size(d, k));
    Eigen::MatrixXd scores(x0.rows(), m + 1);
    parallel_for(static_cast<std::size_t>(x0.rows()), [&](std::size_t idx) {
        const auto n = static_cast<Eigen::Index>(idx);
        const Eigen::VectorXd from = x0.row(n).transpose();
        const Eigen::VectorXd r = x1.row(n).transpose() - from + dt * eval_gradient(model.potential, from);
        const auto basis = gradient_basis(from, d, k);
        for (Eigen::Index c = 0; c < m; ++c) {
            scores(n, c) = -r.dot(basis[static_cast<std::size_t>(c)]) / s2;
        }
        scores(n, m) = -d / (2.0 * s2) + r.squaredNorm() / (2.0 * s2 * s2 * dt);
    });
    return scores;
}

} // namespace

std::pair<double, double> variance_with_jackknife(const Eigen::Ref<const Eigen::VectorXd>& values) {
    const auto n = static_cast<double>(values.size());
    require(values.size() >= 2, "variance needs at least two values");
    // centre first so the leave-one-out formulas do not cancel catastrophically
    const Eigen::VectorXd c = values.array() - values.mean();
    const double s1 = c.sum();
    const double s2 = c.squaredNorm();
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    if (values.size() < 3) {
        return {var, std::abs(var)};
    }
    Eigen::VectorXd loo(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double a = s1 - c[i];
        loo[i] = (s2 - c[i] * c[i] - a * a / (n - 1.0)) / (n - 2.0);
    }
    const double mean_loo = loo.mean();
    const double se = std::sqrt((n - 1.0) / n * (loo.array() - mean_loo).square().sum());
    return {var, se};
}

std::map<MultiIndex, double> drift_fisher_theoretical(const LangevinModel& model, const SampleMatrix& init_samples,
                                                      double dt, int degree) {
    model.validate();
    require(dt > 0.0, "time step must be positive");
    require(init_samples.rows() >= 1, "no initial samples");
    require(init_samples.cols() == model.dimension(), "initial samples and model differ in dimension");
    const int d = static_cast<int>(init_samples.cols());
    const int k = resolve_degree(model, degree);
    const auto n = static_cast<double>(init_samples.rows());

    std::map<MultiIndex, double> out;
    for (const auto& alpha : multi_indices(d, k)) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            const int ai = alpha.exponents[static_cast<std::size_t>(i)];
            if (ai == 0) {
                continue;
            }
            std::vector<int> e(alpha.exponents);
            for (auto& v : e) {
                v *= 2;
            }
            e[static_cast<std::size_t>(i)] -= 2;
            const MultiIndex moment(e);
            double mean = 0.0;
            for (Eigen::Index j = 0; j < init_samples.rows(); ++j) {
                mean += monomial(init_samples.row(j).transpose(), moment);
            }
            acc += ai * ai * mean / n;
        }
        out[alpha] = n * dt * acc / model.sigma2;
    }
    return out;
}

double diffusion_fisher_theoretical(int d, double sigma2, std::size_t n) {
    require(d >= 1, "dimension must be positive");
    require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma2 must be positive");
    return static_cast<double>(n) * d / (2.0 * sigma2 * sigma2);
}

FisherReport empirical_score_variance(const LangevinModel& model, const TrajectorySet& trajs, int degree) {
    model.validate();
    trajs.validate();
    require(trajs.num_times() == 2, "score variance needs trajectories with exactly two times");
    require(trajs.dimension() == model.dimension(), "model and trajectories differ in dimension");
    require(trajs.num_paths() >= 2, "score variance needs at least two trajectories");
    const int d = trajs.dimension();
    const int k = resolve_degree(model, degree);
    const double dt = trajs.times[1] - trajs.times[0];
    const auto n = trajs.num_paths();

    const Eigen::MatrixXd scores = trajectory_scores(model, trajs.positions[0], trajs.positions[1], dt, k);
    const auto theory = drift_fisher_theoretical(model, trajs.positions[0], dt, k);

    FisherReport rep;
    rep.n = n;
    rep.dt = dt;
    rep.d = d;
    rep.sigma2 = model.sigma2;
    const auto alphas = multi_indices(d, k);
    const double nd = static_cast<double>(n);
    for (std::size_t c = 0; c < alphas.size(); ++c) {
        const auto [var, se] = variance_with_jackknife(scores.col(static_cast<Eigen::Index>(c)));
        rep.per_coefficient[alphas[c]] = {theory.at(alphas[c]), nd * var, nd * se};
    }
    const auto [var, se] = variance_with_jackknife(scores.col(scores.cols() - 1));
    rep.diffusion = {diffusion_fisher_theoretical(d, model.sigma2, n), nd * var, nd * se};
    return rep;
}

GapReport information_gap_estimate(const LangevinModel& model, const TrajectorySet& trajs, const Coupling& coupling,
                                   int n_resample, Seed seed, int degree) {
    model.validate();
    trajs.validate();
    require(trajs.num_times() == 2, "information gap needs trajectories with exactly two times");
    require(trajs.dimension() == model.dimension(), "model and trajectories differ in dimension");
    require(n_resample >= 2, "information gap needs at least two resampled pairings");
    const auto n = static_cast<Eigen::Index>(trajs.num_paths());
    require(coupling.weights.rows() == n && coupling.weights.cols() == n,
            "coupling shape does not match the snapshot clouds");
    require((coupling.weights.array() >= 0.0).all(), "coupling weights must be non-negative");
    const int d = trajs.dimension();
    const int k = resolve_degree(model, degree);
    const double dt = trajs.times[1] - trajs.times[0];
    const auto& x0 = trajs.positions[0];
    const auto& x1 = trajs.positions[1];
    const auto m = static_cast<Eigen::Index>(basis_size(d, k));

    Eigen::MatrixXd totals(n_resample, m + 1);
    parallel_for(static_cast<std::size_t>(n_resample), [&](std::size_t r) {
        rng::Stream stream(seed, rng::Domain::Resample, r);
        const auto order = rng::permutation(static_cast<std::size_t>(n), stream);
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        SampleMatrix paired(n, d);
        for (const auto i_sz : order) {
            const auto i = static_cast<Eigen::Index>(i_sz);
            double mass = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                mass += used[static_cast<std::size_t>(j)] ? 0.0 : coupling.weights(i, j);
            }
            Eigen::Index pick = -1;
            if (mass > 0.0) {
                double target = stream.uniform() * mass;
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (used[static_cast<std::size_t>(j)] || coupling.weights(i, j) == 0.0) {
                        continue;
                    }
                    pick = j;
                    target -= coupling.weights(i, j);
                    if (target < 0.0) {
                        break;
                    }
                }
            } else {
                auto slot = stream.below(static_cast<std::uint64_t>(std::count(used.begin(), used.end(), 0)));
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (!used[static_cast<std::size_t>(j)] && slot-- == 0) {
                        pick = j;
                        break;
                    }
                }
            }
            used[static_cast<std::size_t>(pick)] = 1;
            paired.row(i) = x1.row(pick);
        }
        totals.row(static_cast<Eigen::Index>(r)) = trajectory_scores(model, x0, paired, dt, k).colwise().sum();
    });

    GapReport rep;
    rep.resamples = n_resample;
    const auto alphas = multi_indices(d, k);
    for (std::size_t c = 0; c < alphas.size(); ++c) {
        const auto [var, se] = variance_with_jackknife(totals.col(static_cast<Eigen::Index>(c)));
        rep.per_coefficient[alphas[c]] = {0.0, var, se};
    }
    const auto [var, se] = variance_with_jackknife(totals.col(m));
    rep.diffusion = {0.0, var, se};
    return rep;
}

} // namespace sdeid
