#include "sdeid/estimate.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/stationary.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sdeid {

std::string to_string(DataSetting s) { return s == DataSetting::Trajectories ? "trajectories" : "marginals"; }

std::string to_string(Sigma2Init s) { return s == Sigma2Init::NearestNeighbour ? "nearest_neighbour" : "all_pairs"; }

Sigma2Init sigma2_init_from_string(const std::string& s) {
    if (s == "nearest_neighbour") {
        return Sigma2Init::NearestNeighbour;
    }
    if (s == "all_pairs") {
        return Sigma2Init::AllPairs;
    }
    throw InputError("unknown sigma2_init '" + s + "' (expected nearest_neighbour or all_pairs)");
}

Coupling permutation_coupling(const std::vector<std::size_t>& perm) {
    const auto n = static_cast<Eigen::Index>(perm.size());
    require(n >= 1, "permutation is empty");
    Coupling c;
    c.weights = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
        require(j < n, "permutation entry out of range");
        c.weights(i, j) = 1.0 / static_cast<double>(n);
    }
    c.row_marginal = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    c.col_marginal = c.row_marginal;
    return c;
}

// ---------------------------------------------------------------- Sinkhorn

namespace {

// eps * log sum_k exp(v_k / eps), stable
double soft_max(const Eigen::Ref<const Eigen::VectorXd>& v, double eps) {
    const double top = v.maxCoeff();
    if (!std::isfinite(top)) {
        return top;
    }
    return top + eps * std::log(((v.array() - top) / eps).exp().sum());
}

// Kernel exp((f_i + g_j - C_ij) / eps) restricted to entries above exp(-kTruncate), stored by rows.
constexpr double kTruncate = 60.0;
// Scalings are folded into (f, g) and the kernel rebuilt once either exceeds exp(kAbsorb).
constexpr double kAbsorb = 15.0;
// Regularization shrinks by this factor per annealing stage.
constexpr double kAnneal = 2.0;
constexpr double kAnnealSpan = 64.0;
constexpr int kStageIters = 50;
constexpr double kStageTol = 1e-3;

struct TruncatedKernel {
    std::vector<Eigen::Index> row_start;
    std::vector<Eigen::Index> col;
    std::vector<double> val;

    void build(const Eigen::MatrixXd& cost, const Eigen::VectorXd& f, const Eigen::VectorXd& g, double eps) {
        const Eigen::Index n0 = cost.rows();
        const Eigen::Index n1 = cost.cols();
        row_start.assign(static_cast<std::size_t>(n0) + 1, 0);
        col.clear();
        val.clear();
        for (Eigen::Index i = 0; i < n0; ++i) {
            for (Eigen::Index j = 0; j < n1; ++j) {
                const double e = (f[i] + g[j] - cost(i, j)) / eps;
                if (e > -kTruncate) {
                    col.push_back(j);
                    val.push_back(std::exp(e));
                }
            }
            row_start[static_cast<std::size_t>(i) + 1] = static_cast<Eigen::Index>(col.size());
        }
    }

    void times(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        const auto n0 = static_cast<Eigen::Index>(row_start.size()) - 1;
        for (Eigen::Index i = 0; i < n0; ++i) {
            double s = 0.0;
            for (auto k = row_start[i]; k < row_start[i + 1]; ++k) {
                s += val[k] * v[col[k]];
            }
            out[i] = s;
        }
    }

    void transpose_times(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
        out.setZero();
        const auto n0 = static_cast<Eigen::Index>(row_start.size()) - 1;
        for (Eigen::Index i = 0; i < n0; ++i) {
            for (auto k = row_start[i]; k < row_start[i + 1]; ++k) {
                out[col[k]] += val[k] * u[i];
            }
        }
    }
};

} // namespace

Coupling sinkhorn_from_cost(const Eigen::MatrixXd& cost, double epsilon, int max_iter, double tol) {
    const Eigen::Index n0 = cost.rows();
    const Eigen::Index n1 = cost.cols();
    require(n0 >= 1 && n1 >= 1, "coupling needs two nonempty clouds");
    require(epsilon > 0.0 && std::isfinite(epsilon), "entropic regularization must be positive");
    require(max_iter >= 1 && tol > 0.0, "Sinkhorn needs max_iter >= 1 and tol > 0");
    require(cost.allFinite(), "cost matrix is not finite");

    const double a = 1.0 / static_cast<double>(n0);
    const double b = 1.0 / static_cast<double>(n1);
    Coupling out;
    out.row_marginal = Eigen::VectorXd::Constant(n0, a);
    out.col_marginal = Eigen::VectorXd::Constant(n1, b);
    if (n0 == 1 || n1 == 1) {
        out.weights = Eigen::MatrixXd::Constant(n0, n1, a * b);
        out.iterations = 0;
        return out;
    }

    const double log_a = std::log(a);
    const double log_b = std::log(b);
    // Anneal from a coarse regularization down to the requested one; duals carry over between stages.
    const double eps_start = std::max(epsilon, std::min(cost.maxCoeff(), kAnnealSpan * epsilon));
    const int stages =
        eps_start <= epsilon ? 0 : static_cast<int>(std::ceil(std::log(eps_start / epsilon) / std::log(kAnneal)));
    double eps = epsilon * std::pow(kAnneal, stages);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(n0), g = Eigen::VectorXd::Zero(n1);
    auto update_f = [&] {
        for (Eigen::Index i = 0; i < n0; ++i) {
            f[i] = eps * log_a - soft_max(g - cost.row(i).transpose(), eps);
        }
    };
    auto update_g = [&] {
        for (Eigen::Index j = 0; j < n1; ++j) {
            g[j] = eps * log_b - soft_max(f - cost.col(j), eps);
        }
    };
    update_f();
    update_g();

    TruncatedKernel kernel;
    kernel.build(cost, f, g, eps);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n0);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n1);
    Eigen::VectorXd kv(n0), ktu(n1);

    auto absorb = [&] {
        f.array() += eps * u.array().log();
        g.array() += eps * v.array().log();
        u.setOnes();
        v.setOnes();
    };

    double violation = std::numeric_limits<double>::infinity();
    int it = 0;
    int stage = stages;
    int stage_it = 0;
    for (; it < max_iter; ++it, ++stage_it) {
        kernel.times(v, kv);
        if ((kv.array() <= 0.0).any()) {
            // truncation emptied a row; redo this half-step exactly in the log domain
            absorb();
            update_f();
            kernel.build(cost, f, g, eps);
            kernel.times(v, kv);
        }
        u = a / kv.array();
        kernel.transpose_times(u, ktu);
        if ((ktu.array() <= 0.0).any()) {
            absorb();
            update_g();
            kernel.build(cost, f, g, eps);
            kernel.transpose_times(u, ktu);
        }
        v = b / ktu.array();

        const bool final_stage = stage == 0;
        if (it % 5 == 4 || it + 1 == max_iter || (!final_stage && stage_it + 1 >= kStageIters)) {
            // column sums are exact right after the v update
            kernel.times(v, kv);
            violation = (u.array() * kv.array() - a).abs().sum();
            if (final_stage && violation < tol) {
                ++it;
                break;
            }
            if (!final_stage && (violation < kStageTol || stage_it + 1 >= kStageIters)) {
                absorb();
                --stage;
                stage_it = -1;
                eps = epsilon * std::pow(kAnneal, stage);
                kernel.build(cost, f, g, eps);
                continue;
            }
        }
        const double hi = std::exp(kAbsorb);
        const double lo = std::exp(-kAbsorb);
        if (u.maxCoeff() > hi || u.minCoeff() < lo || v.maxCoeff() > hi || v.minCoeff() < lo) {
            absorb();
            kernel.build(cost, f, g, eps);
        }
    }

    out.weights = Eigen::MatrixXd::Zero(n0, n1);
    for (Eigen::Index i = 0; i < n0; ++i) {
        for (auto k = kernel.row_start[i]; k < kernel.row_start[i + 1]; ++k) {
            out.weights(i, kernel.col[k]) = u[i] * kernel.val[k] * v[kernel.col[k]];
        }
    }
    out.iterations = it;
    out.marginal_violation = (out.weights.rowwise().sum() - out.row_marginal).cwiseAbs().sum() +
                             (out.weights.colwise().sum().transpose() - out.col_marginal).cwiseAbs().sum();
    out.converged = out.marginal_violation < tol;
    return out;
}

namespace {

SampleMatrix predicted_means(const SampleMatrix& from, const Eigen::MatrixXd& design, const Eigen::VectorXd& theta,
                             double dt) {
    const Eigen::VectorXd drift = design * theta;
    SampleMatrix pred = from;
    const Eigen::Index d = from.cols();
    for (Eigen::Index n = 0; n < from.rows(); ++n) {
        for (Eigen::Index i = 0; i < d; ++i) {
            pred(n, i) -= dt * drift[n * d + i];
        }
    }
    return pred;
}

Eigen::MatrixXd squared_distances(const SampleMatrix& pred, const SampleMatrix& to) {
    Eigen::MatrixXd c(pred.rows(), to.rows());
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            c(i, j) = (to.row(j) - pred.row(i)).squaredNorm();
        }
    }
    return c;
}

} // namespace

Coupling sinkhorn_coupling(const SampleMatrix& x0, const SampleMatrix& x1, const LangevinModel& model_guess, double dt,
                           const SinkhornConfig& config) {
    require(x0.rows() >= 1 && x1.rows() >= 1, "coupling needs two nonempty clouds");
    require(x0.cols() == x1.cols() && x0.cols() == model_guess.dimension(), "clouds and model differ in dimension");
    require(dt > 0.0, "time step must be positive");
    model_guess.validate();
    require(config.epsilon_scale > 0.0, "epsilon_scale must be positive");
    SampleMatrix pred = x0;
    for (Eigen::Index n = 0; n < x0.rows(); ++n) {
        pred.row(n) -= dt * eval_gradient(model_guess.potential, x0.row(n).transpose()).transpose();
    }
    return sinkhorn_from_cost(squared_distances(pred, x1), config.epsilon_scale * model_guess.sigma2 * dt,
                              config.max_iter, config.tol);
}

// ---------------------------------------------------------------- weighted MLE

namespace {

struct PreparedBlock {
    const TransitionBlock* block;
    Eigen::MatrixXd design;
};

// sum_ij w_ij |to_j - pred_i|^2, weight total
std::pair<double, double> weighted_sq_residual(const TransitionBlock& blk, const SampleMatrix& pred) {
    double ss = 0.0;
    double wsum = 0.0;
    if (blk.weights.size() == 0) {
        for (Eigen::Index n = 0; n < pred.rows(); ++n) {
            ss += (blk.to.row(n) - pred.row(n)).squaredNorm();
        }
        return {ss, static_cast<double>(pred.rows())};
    }
    for (Eigen::Index j = 0; j < blk.to.rows(); ++j) {
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            const double w = blk.weights(i, j);
            if (w == 0.0) {
                continue;
            }
            ss += w * (blk.to.row(j) - pred.row(i)).squaredNorm();
            wsum += w;
        }
    }
    return {ss, wsum};
}

} // namespace

MleFit weighted_mle(const std::vector<TransitionBlock>& blocks, int degree, double sigma2_floor) {
    require(!blocks.empty(), "no transitions to fit");
    require(degree >= 1, "degree must be positive");
    require(sigma2_floor > 0.0, "sigma2 floor must be positive");
    const Eigen::Index d = blocks.front().from.cols();
    const auto m = static_cast<Eigen::Index>(basis_size(static_cast<int>(d), degree));

    Eigen::Index rows = 0;
    for (const auto& blk : blocks) {
        require(blk.dt > 0.0 && std::isfinite(blk.dt), "transition step must be positive");
        require(blk.from.cols() == d && blk.to.cols() == d, "transition blocks differ in dimension");
        if (blk.weights.size() == 0) {
            require(blk.from.rows() == blk.to.rows(), "paired transitions need equal counts");
        } else {
            require(blk.weights.rows() == blk.from.rows() && blk.weights.cols() == blk.to.rows(),
                    "weight matrix shape differs from the clouds");
            require((blk.weights.array() >= 0.0).all(), "pairing weights must be non-negative");
        }
        rows += blk.from.rows() * d;
    }

    std::vector<Eigen::MatrixXd> designs;
    designs.reserve(blocks.size());
    Eigen::MatrixXd a(rows, m);
    Eigen::VectorXd rhs(rows);
    Eigen::Index r0 = 0;
    for (const auto& blk : blocks) {
        designs.push_back(gradient_design(blk.from, degree));
        const Eigen::MatrixXd& design = designs.back();
        Eigen::VectorXd w;
        SampleMatrix target;
        if (blk.weights.size() == 0) {
            w = Eigen::VectorXd::Ones(blk.from.rows());
            target = blk.to;
        } else {
            w = blk.weights.rowwise().sum();
            target = blk.weights * blk.to;
            for (Eigen::Index n = 0; n < target.rows(); ++n) {
                if (w[n] > 0.0) {
                    target.row(n) /= w[n];
                }
            }
        }
        for (Eigen::Index n = 0; n < blk.from.rows(); ++n) {
            const double s = std::sqrt(blk.dt * w[n]);
            for (Eigen::Index i = 0; i < d; ++i) {
                a.row(r0 + n * d + i) = s * design.row(n * d + i);
                rhs[r0 + n * d + i] = w[n] > 0.0 ? -s * (target(n, i) - blk.from(n, i)) / blk.dt : 0.0;
            }
        }
        r0 += blk.from.rows() * d;
    }

    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < m; ++c) {
        scale[c] = scale[c] > 0.0 ? 1.0 / scale[c] : 1.0;
    }
    const Eigen::MatrixXd scaled = a * scale.asDiagonal();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-10);
    cod.compute(scaled);

    MleFit fit;
    fit.theta = scale.asDiagonal() * cod.solve(rhs);
    fit.rank = static_cast<int>(cod.rank());
    fit.null_space_dim = static_cast<int>(m) - fit.rank;

    double ss = 0.0;
    double wsum = 0.0;
    double ss_dt = 0.0;
    std::vector<std::pair<double, double>> per_block(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto pred = predicted_means(blocks[b].from, designs[b], fit.theta, blocks[b].dt);
        per_block[b] = weighted_sq_residual(blocks[b], pred);
        ss += per_block[b].first / blocks[b].dt;
        wsum += per_block[b].second;
    }
    require(wsum > 0.0, "pairing weights sum to zero");
    fit.sigma2 = ss / (static_cast<double>(d) * wsum);

    const double s2 = std::max(fit.sigma2, sigma2_floor);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const double dt = blocks[b].dt;
        ss_dt += -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * s2 * dt) * per_block[b].second -
                 per_block[b].first / (2.0 * s2 * dt);
    }
    fit.loglik = ss_dt;
    return fit;
}

EstimationResult mle_from_trajectories(const TrajectorySet& trajs, int degree, double sigma2_floor) {
    trajs.validate();
    require(trajs.num_times() >= 2, "need at least two times");
    const auto m = basis_size(trajs.dimension(), degree);
    require(trajs.num_paths() * (trajs.num_times() - 1) >= m, "fewer transitions than basis functions");

    std::vector<TransitionBlock> blocks;
    for (std::size_t t = 0; t + 1 < trajs.num_times(); ++t) {
        blocks.push_back({trajs.positions[t], trajs.positions[t + 1], trajs.times[t + 1] - trajs.times[t], {}});
    }
    const MleFit fit = weighted_mle(blocks, degree, sigma2_floor);

    EstimationResult res;
    res.potential = PolynomialPotential::from_basis_coefficients(trajs.dimension(), degree, fit.theta);
    res.degree = degree;
    res.iterations = 1;
    res.loglik_trace = {fit.loglik};
    res.data_setting = DataSetting::Trajectories;
    res.converged = true;
    res.null_space_dim = fit.null_space_dim;
    res.sigma2_hat = std::max(fit.sigma2, sigma2_floor);
    if (fit.null_space_dim > 0) {
        std::ostringstream os;
        os << "drift design is rank deficient: null space of dimension " << fit.null_space_dim
           << "; least-norm coefficients returned";
        res.warnings.push_back(os.str());
    }
    if (fit.sigma2 < sigma2_floor) {
        std::ostringstream os;
        os << "estimated sigma2 " << fit.sigma2 << " below floor; set to " << sigma2_floor;
        res.warnings.push_back(os.str());
    }
    return res;
}

// ---------------------------------------------------------------- alternating estimator

namespace {

double nearest_neighbour_sigma2(const SnapshotSeries& series) {
    const double d = series.dimension();
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < series.size(); ++p) {
        const auto& x0 = series.samples[p];
        const auto& x1 = series.samples[p + 1];
        double acc = 0.0;
        for (Eigen::Index j = 0; j < x1.rows(); ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < x0.rows(); ++i) {
                best = std::min(best, (x1.row(j) - x0.row(i)).squaredNorm());
            }
            acc += best;
        }
        const double dt = series.times[p + 1] - series.times[p];
        total += acc / static_cast<double>(x1.rows()) / (d * dt);
    }
    return total / static_cast<double>(series.size() - 1);
}

// mean squared displacement under the independent pairing, per coordinate and unit time
double all_pairs_sigma2(const SnapshotSeries& series) {
    const double d = series.dimension();
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < series.size(); ++p) {
        const auto& x0 = series.samples[p];
        const auto& x1 = series.samples[p + 1];
        const Eigen::RowVectorXd m0 = x0.colwise().mean();
        const Eigen::RowVectorXd m1 = x1.colwise().mean();
        const double msd = x0.rowwise().squaredNorm().mean() + x1.rowwise().squaredNorm().mean() - 2.0 * m0.dot(m1);
        const double dt = series.times[p + 1] - series.times[p];
        total += msd / (d * dt);
    }
    return total / static_cast<double>(series.size() - 1);
}

double plan_entropy(const Eigen::MatrixXd& w) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double v = w(i, j);
            if (v > 0.0) {
                h -= v * std::log(v);
            }
        }
    }
    return h;
}

} // namespace

EstimationResult appex_estimate(const SnapshotSeries& series, const EstimatorConfig& config) {
    series.validate();
    require(series.size() >= 2, "need at least two snapshots");
    require(config.degree >= 1 && config.max_outer >= 1 && config.tol > 0.0, "invalid estimator configuration");
    require(config.sinkhorn.epsilon_scale > 0.0, "epsilon_scale must be positive");
    const int d = series.dimension();
    const int k = config.degree;
    const auto m = static_cast<Eigen::Index>(basis_size(d, k));
    const std::size_t pairs = series.size() - 1;

    std::vector<Eigen::MatrixXd> designs(pairs);
    std::vector<double> dts(pairs);
    bool trivial = true;
    for (std::size_t p = 0; p < pairs; ++p) {
        designs[p] = gradient_design(series.samples[p], k);
        dts[p] = series.times[p + 1] - series.times[p];
        trivial = trivial && (series.samples[p].rows() == 1 || series.samples[p + 1].rows() == 1);
    }
    const double lambda = 0.5 * config.sinkhorn.epsilon_scale;

    EstimationResult res;
    res.degree = k;
    res.data_setting = DataSetting::Marginals;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
    const double sigma2_init = config.sigma2_init == Sigma2Init::NearestNeighbour ? nearest_neighbour_sigma2(series)
                                                                                     : all_pairs_sigma2(series);
    double sigma2 = std::max(sigma2_init, config.sigma2_floor);
    double objective_prev = -std::numeric_limits<double>::infinity();
    int null_dim = 0;
    bool floored = false;

    for (int outer = 1; outer <= config.max_outer; ++outer) {
        std::vector<Coupling> plans(pairs);
        parallel_for(pairs, [&](std::size_t p) {
            const auto pred = predicted_means(series.samples[p], designs[p], theta, dts[p]);
            plans[p] = sinkhorn_from_cost(squared_distances(pred, series.samples[p + 1]),
                                          config.sinkhorn.epsilon_scale * sigma2 * dts[p], config.sinkhorn.max_iter,
                                          config.sinkhorn.tol);
        });
        std::vector<TransitionBlock> blocks;
        blocks.reserve(pairs);
        double entropy = 0.0;
        int unconverged = 0;
        for (std::size_t p = 0; p < pairs; ++p) {
            entropy += plan_entropy(plans[p].weights);
            unconverged += plans[p].converged ? 0 : 1;
            blocks.push_back({series.samples[p], series.samples[p + 1], dts[p], std::move(plans[p].weights)});
        }
        const MleFit fit = weighted_mle(blocks, k, config.sigma2_floor);
        const double objective = fit.loglik + lambda * entropy;

        if (objective < objective_prev - 1e-6 * std::max(1.0, std::abs(objective_prev))) {
            std::ostringstream os;
            os << "iteration " << outer << " lowered the objective from " << objective_prev << " to " << objective
               << "; stopped at the previous iterate";
            res.warnings.push_back(os.str());
            break;
        }
        if (unconverged > 0) {
            std::ostringstream os;
            os << "iteration " << outer << ": " << unconverged << " Sinkhorn plan(s) hit max_iter";
            res.warnings.push_back(os.str());
        }
        const double change = (fit.theta - theta).cwiseAbs().maxCoeff();
        theta = fit.theta;
        floored = fit.sigma2 < config.sigma2_floor;
        sigma2 = std::max(fit.sigma2, config.sigma2_floor);
        null_dim = fit.null_space_dim;
        objective_prev = objective;
        res.loglik_trace.push_back(objective);
        res.iterations = outer;
        if (trivial || change < config.tol) {
            res.converged = true;
            break;
        }
    }

    res.potential = PolynomialPotential::from_basis_coefficients(d, k, theta);
    res.sigma2_hat = sigma2;
    res.null_space_dim = null_dim;
    if (null_dim > 0) {
        std::ostringstream os;
        os << "drift design is rank deficient: null space of dimension " << null_dim
           << "; least-norm coefficients returned";
        res.warnings.push_back(os.str());
    }
    if (floored) {
        res.warnings.push_back("estimated sigma2 below floor; floored");
    }
    return res;
}

std::vector<std::pair<std::size_t, std::size_t>> regime_ranges(const SnapshotSeries& series, const RegimeSpec& regimes) {
    series.validate();
    const auto& b = regimes.boundaries;
    require(b.size() >= 2, "regime specification needs at least two boundaries");
    for (std::size_t i = 1; i < b.size(); ++i) {
        require(b[i] > b[i - 1], "regime boundaries must be strictly increasing");
    }
    require(series.times.front() >= b.front() && series.times.back() <= b.back(),
            "snapshot times fall outside the regime boundaries");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t r = 0; r + 1 < b.size(); ++r) {
        const bool last = r + 2 == b.size();
        std::size_t first = series.size();
        std::size_t end = 0;
        for (std::size_t t = 0; t < series.size(); ++t) {
            const double tt = series.times[t];
            if (tt >= b[r] && (tt < b[r + 1] || (last && tt == b[r + 1]))) {
                first = std::min(first, t);
                end = t;
            }
        }
        if (first == series.size() || end <= first) {
            std::ostringstream os;
            os << "regime " << r << " [" << b[r] << ", " << b[r + 1] << ") contains fewer than 2 snapshots";
            throw InputError(os.str());
        }
        out.emplace_back(first, end);
    }
    return out;
}

std::optional<std::string> stationarity_warning(const SnapshotSeries& series, const EstimatorConfig& config) {
    if (series.size() < 2 || series.samples.front().rows() < 10 || series.samples.back().rows() < 10) {
        return std::nullopt;
    }
    // consecutive snapshots of short series are too close for the test to separate
    SnapshotSeries ends;
    ends.times = {series.times.front(), series.times.back()};
    ends.samples = {series.samples.front(), series.samples.back()};
    const auto rec = stationarity_test(ends, config.stationarity_permutations, config.seed);
    if (rec.front().p_value < config.stationarity_level) {
        return std::nullopt;
    }
    std::ostringstream os;
    os << "snapshots at t=" << rec.front().t_i << " and t=" << rec.front().t_j
       << " are not distinguishable (energy test p=" << rec.front().p_value
       << "); the data may be stationary, where drift and diffusivity are not identifiable";
    return os.str();
}

std::vector<EstimationResult> estimate_piecewise(const SnapshotSeries& series, const RegimeSpec& regimes,
                                                 const EstimatorConfig& config) {
    const auto ranges = regime_ranges(series, regimes);
    std::vector<EstimationResult> out;
    for (const auto& [first, last] : ranges) {
        const SnapshotSeries part = series.slice(first, last);
        auto res = appex_estimate(part, config);
        if (auto w = stationarity_warning(part, config)) {
            res.warnings.push_back(*w);
        }
        out.push_back(std::move(res));
    }
    return out;
}

} // namespace sdeid
