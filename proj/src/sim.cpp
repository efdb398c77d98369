#include "sdeid/sim.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"
#include "sdeid/stationary.hpp"

#include <cmath>
#include <sstream>

namespace sdeid {

void LangevinModel::validate(bool allow_zero_noise) const {
    if (allow_zero_noise) {
        require(sigma2 >= 0.0 && std::isfinite(sigma2), "sigma2 must be non-negative");
    } else {
        require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma2 must be positive");
    }
}

int distribution_dimension(const InitialDistribution& dist) {
    struct Visitor {
        int operator()(const UniformBox& u) const { return u.dimension; }
        int operator()(const Gaussian& g) const { return static_cast<int>(g.mean.size()); }
        int operator()(const Rademacher& r) const { return r.dimension; }
        int operator()(const Dirac& p) const { return static_cast<int>(p.point.size()); }
        int operator()(const GibbsOf& g) const { return g.model.dimension(); }
        int operator()(const LangevinBurnIn& b) const { return b.model.dimension(); }
    };
    return std::visit(Visitor{}, dist);
}

bool is_stationary_init(const InitialDistribution& dist) {
    return std::holds_alternative<GibbsOf>(dist) || std::holds_alternative<LangevinBurnIn>(dist);
}

Eigen::VectorXd TrajectorySet::state(std::size_t path, std::size_t time_index) const {
    return positions.at(time_index).row(static_cast<Eigen::Index>(path)).transpose();
}

namespace {

void check_times(const std::vector<double>& times) {
    for (std::size_t t = 0; t < times.size(); ++t) {
        require(std::isfinite(times[t]), "time is not finite");
        if (t > 0) {
            require(times[t] > times[t - 1], "times must be strictly increasing");
        }
    }
}

void check_clouds(const std::vector<SampleMatrix>& clouds, std::size_t count, bool same_rows) {
    require(clouds.size() == count, "number of sample clouds differs from number of times");
    for (const auto& c : clouds) {
        require(c.rows() >= 1, "sample cloud is empty");
        require(c.cols() == clouds.front().cols(), "sample clouds differ in dimension");
        if (same_rows) {
            require(c.rows() == clouds.front().rows(), "trajectory set has ragged paths");
        }
        require(c.allFinite(), "sample cloud has non-finite entries");
    }
}

} // namespace

void TrajectorySet::validate() const {
    require(!times.empty(), "trajectory set has no times");
    check_times(times);
    check_clouds(positions, times.size(), true);
}

void SnapshotSeries::validate() const {
    require(!times.empty(), "snapshot series is empty");
    check_times(times);
    check_clouds(samples, times.size(), false);
}

SnapshotSeries SnapshotSeries::slice(std::size_t first, std::size_t last) const {
    require(first <= last && last < size(), "snapshot slice out of range");
    SnapshotSeries out;
    for (std::size_t i = first; i <= last; ++i) {
        out.times.push_back(times[i]);
        out.samples.push_back(samples[i]);
    }
    return out;
}

SampleMatrix sample_initial(const InitialDistribution& dist, std::size_t n, Seed seed) {
    require(n >= 1, "sample count must be at least 1");
    const int d = distribution_dimension(dist);
    require(d >= 1, "initial distribution has no dimension");
    const auto rows = static_cast<Eigen::Index>(n);

    if (const auto* g = std::get_if<GibbsOf>(&dist)) {
        const double scale = g->proposal_scale ? *g->proposal_scale : tune_proposal_scale(g->model, seed);
        return metropolis_sample(g->model, n, g->steps, scale, seed).samples;
    }
    if (const auto* b = std::get_if<LangevinBurnIn>(&dist)) {
        const SampleMatrix start = sample_initial(UniformBox{d, b->start_half_length}, n, rng::derive_seed(seed, 1));
        return langevin_burn_in(b->model, start, b->steps, b->dt, seed);
    }

    SampleMatrix out(rows, d);
    if (const auto* p = std::get_if<Dirac>(&dist)) {
        require(p->point.allFinite(), "Dirac point is not finite");
        for (Eigen::Index r = 0; r < rows; ++r) {
            out.row(r) = p->point.transpose();
        }
        return out;
    }

    Eigen::MatrixXd factor;
    if (const auto* g = std::get_if<Gaussian>(&dist)) {
        require(g->covariance.rows() == d && g->covariance.cols() == d, "covariance shape differs from mean");
        require((g->covariance - g->covariance.transpose()).cwiseAbs().maxCoeff() <=
                    1e-12 * (1.0 + g->covariance.cwiseAbs().maxCoeff()),
                "covariance is not symmetric");
        // Eigen-decomposition so that singular (PSD) covariances are accepted.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g->covariance);
        const double tol = -1e-12 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
        require(es.eigenvalues().minCoeff() >= tol, "covariance is not positive semidefinite");
        factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    if (const auto* u = std::get_if<UniformBox>(&dist)) {
        require(u->half_length > 0.0, "uniform half-length must be positive");
    }
    if (const auto* r = std::get_if<Rademacher>(&dist)) {
        require(r->level > 0.0, "Rademacher level must be positive");
    }

    parallel_for(n, [&](std::size_t i) {
        rng::Stream s(seed, rng::Domain::Initial, i);
        const auto row = static_cast<Eigen::Index>(i);
        if (const auto* u = std::get_if<UniformBox>(&dist)) {
            for (int c = 0; c < d; ++c) {
                out(row, c) = u->half_length * (2.0 * s.uniform() - 1.0);
            }
        } else if (const auto* r = std::get_if<Rademacher>(&dist)) {
            for (int c = 0; c < d; ++c) {
                out(row, c) = (s() >> 63) ? r->level : -r->level;
            }
        } else if (const auto* g = std::get_if<Gaussian>(&dist)) {
            Eigen::VectorXd z(d);
            for (int c = 0; c < d; ++c) {
                z[c] = s.normal();
            }
            out.row(row) = (g->mean + factor * z).transpose();
        }
    });
    return out;
}

Eigen::VectorXd euler_maruyama_step(const LangevinModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double dt,
                                    const Eigen::Ref<const Eigen::VectorXd>& z) {
    require(dt > 0.0, "time step must be positive");
    require(z.size() == x.size(), "noise vector dimension differs from state");
    Eigen::VectorXd next = x - eval_gradient(model.potential, x) * dt + std::sqrt(model.sigma2 * dt) * z;
    if (!next.allFinite()) {
        throw NumericalError("Euler-Maruyama step produced a non-finite state");
    }
    return next;
}

std::vector<double> uniform_times(double dt, int n_steps) {
    require(dt > 0.0 && n_steps >= 1, "need a positive step and at least one step");
    std::vector<double> t(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i) {
        t[static_cast<std::size_t>(i)] = i * dt;
    }
    return t;
}

TrajectorySet simulate(const LangevinModel& model, const SampleMatrix& init, const std::vector<double>& times, Seed seed,
                       const SimulateOptions& options) {
    model.validate(true);
    require(!times.empty() && times.front() == 0.0, "simulation times must start at 0");
    check_times(times);
    require(init.rows() >= 1, "need at least one initial state");
    require(init.cols() == model.dimension(), "initial states have the wrong dimension");
    require(options.substeps >= 1, "substeps must be at least 1");
    require(init.allFinite(), "initial states are not finite");

    const int d = model.dimension();
    const auto n = static_cast<std::size_t>(init.rows());
    TrajectorySet out;
    out.times = times;
    out.seed = seed;
    out.positions.assign(times.size(), SampleMatrix(init.rows(), d));
    out.positions[0] = init;

    std::vector<std::string> failures(n);
    parallel_for(n, [&](std::size_t p) {
        const auto row = static_cast<Eigen::Index>(p);
        Eigen::VectorXd x = init.row(row).transpose();
        Eigen::VectorXd z(d);
        std::uint64_t step = 0;
        for (std::size_t t = 1; t < times.size(); ++t) {
            const double dt = (times[t] - times[t - 1]) / options.substeps;
            const double noise = std::sqrt(model.sigma2 * dt);
            for (int s = 0; s < options.substeps; ++s, ++step) {
                rng::normals_at(seed, rng::Domain::Increment, p, step, std::span<double>(z.data(), d));
                x -= eval_gradient(model.potential, x) * dt;
                if (noise > 0.0) {
                    x += noise * z;
                }
                if (!x.allFinite() || x.cwiseAbs().maxCoeff() > options.divergence_bound) {
                    std::ostringstream os;
                    os << "simulation diverged on path " << p << " at time " << times[t - 1] + (s + 1) * dt;
                    failures[p] = os.str();
                    return;
                }
            }
            out.positions[t].row(row) = x.transpose();
        }
    });
    for (const auto& f : failures) {
        if (!f.empty()) {
            throw NumericalError(f);
        }
    }
    return out;
}

SnapshotSeries shuffle_to_snapshots(const TrajectorySet& trajs, Seed seed, const std::vector<std::size_t>& keep) {
    trajs.validate();
    std::vector<std::size_t> idx = keep;
    if (idx.empty()) {
        for (std::size_t t = 0; t < trajs.num_times(); ++t) {
            idx.push_back(t);
        }
    }
    SnapshotSeries out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::size_t t = idx[k];
        require(t < trajs.num_times(), "snapshot index out of range");
        require(k == 0 || t > idx[k - 1], "snapshot indices must be increasing");
        rng::Stream stream(seed, rng::Domain::Shuffle, t);
        const auto perm = rng::permutation(trajs.num_paths(), stream);
        const SampleMatrix& src = trajs.positions[t];
        SampleMatrix dst(src.rows(), src.cols());
        for (std::size_t r = 0; r < perm.size(); ++r) {
            dst.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(perm[r]));
        }
        out.times.push_back(trajs.times[t]);
        out.samples.push_back(std::move(dst));
    }
    return out;
}

} // namespace sdeid
