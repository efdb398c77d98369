#include "sdeid/stationary.hpp"
#include "sdeid/parallel.hpp"
#include "sdeid/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sdeid {

double gibbs_log_density(const LangevinModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    model.validate();
    return -2.0 * eval_potential(model.potential, x) / model.sigma2;
}

namespace {

constexpr double kStartBox = 8.0;

// Start states: Gibbs density tabulated on [-8, 8]^d for d <= 2, uniform on [-4, 4]^d otherwise.
class StartSampler {
public:
    explicit StartSampler(const LangevinModel& model) : d_(model.dimension()) {
        if (d_ > 2) {
            return;
        }
        res_ = d_ == 1 ? 4001 : 321;
        h_ = 2.0 * kStartBox / (res_ - 1);
        const std::size_t nodes = d_ == 1 ? res_ : static_cast<std::size_t>(res_) * res_;
        std::vector<double> logp(nodes);
        Eigen::VectorXd x(d_);
        for (std::size_t k = 0; k < nodes; ++k) {
            to_point(k, x);
            logp[k] = -2.0 * eval_potential(model.potential, x) / model.sigma2;
        }
        const double top = *std::max_element(logp.begin(), logp.end());
        cdf_.resize(nodes);
        double acc = 0.0;
        for (std::size_t k = 0; k < nodes; ++k) {
            acc += std::exp(logp[k] - top);
            cdf_[k] = acc;
        }
    }

    Eigen::VectorXd draw(rng::Stream& s) const {
        Eigen::VectorXd x(d_);
        if (cdf_.empty()) {
            for (int i = 0; i < d_; ++i) {
                x[i] = 4.0 * (2.0 * s.uniform() - 1.0);
            }
            return x;
        }
        const double u = s.uniform() * cdf_.back();
        const auto k = static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
        to_point(std::min(k, cdf_.size() - 1), x);
        for (int i = 0; i < d_; ++i) {
            x[i] += h_ * (s.uniform() - 0.5);
        }
        return x;
    }

private:
    void to_point(std::size_t k, Eigen::VectorXd& x) const {
        if (d_ == 1) {
            x[0] = -kStartBox + h_ * static_cast<double>(k);
        } else {
            x[0] = -kStartBox + h_ * static_cast<double>(k / res_);
            x[1] = -kStartBox + h_ * static_cast<double>(k % res_);
        }
    }

    int d_;
    int res_ = 0;
    double h_ = 0.0;
    std::vector<double> cdf_;
};

struct ChainOutcome {
    Eigen::VectorXd state;
    long accepted = 0;
};

ChainOutcome run_chain(const LangevinModel& model, Eigen::VectorXd x, int steps, double scale, rng::Stream& s) {
    const int d = model.dimension();
    double logp = -2.0 * eval_potential(model.potential, x) / model.sigma2;
    Eigen::VectorXd y(d);
    long accepted = 0;
    for (int step = 0; step < steps; ++step) {
        for (int i = 0; i < d; ++i) {
            y[i] = x[i] + scale * s.normal();
        }
        const double logq = -2.0 * eval_potential(model.potential, y) / model.sigma2;
        if (std::log(s.uniform()) < logq - logp) {
            x = y;
            logp = logq;
            ++accepted;
        }
    }
    return {std::move(x), accepted};
}

} // namespace

MetropolisResult metropolis_sample(const LangevinModel& model, std::size_t n, int steps, double proposal_scale, Seed seed) {
    model.validate();
    require(n >= 1, "need at least one chain");
    require(steps >= 1, "need at least one Metropolis step");
    require(proposal_scale > 0.0 && std::isfinite(proposal_scale), "proposal scale must be positive");

    const StartSampler start(model);
    MetropolisResult out;
    out.samples.resize(static_cast<Eigen::Index>(n), model.dimension());
    out.proposal_scale = proposal_scale;
    std::vector<long> accepted(n);
    parallel_for(n, [&](std::size_t c) {
        rng::Stream s(seed, rng::Domain::Metropolis, c);
        auto res = run_chain(model, start.draw(s), steps, proposal_scale, s);
        out.samples.row(static_cast<Eigen::Index>(c)) = res.state.transpose();
        accepted[c] = res.accepted;
    });
    const double total = std::accumulate(accepted.begin(), accepted.end(), 0.0);
    out.acceptance_rate = total / (static_cast<double>(n) * steps);
    if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.95) {
        std::ostringstream os;
        os << "Metropolis acceptance rate " << out.acceptance_rate << " outside [0.05, 0.95] at proposal scale "
           << proposal_scale;
        out.warnings.push_back(os.str());
    }
    return out;
}

double tune_proposal_scale(const LangevinModel& model, Seed seed, double target) {
    model.validate();
    require(target > 0.0 && target < 1.0, "target acceptance must lie in (0, 1)");
    constexpr std::size_t kChains = 32;
    constexpr int kRounds = 40;
    constexpr int kBatch = 50;
    const StartSampler start(model);
    std::vector<rng::Stream> streams;
    std::vector<Eigen::VectorXd> states;
    for (std::size_t c = 0; c < kChains; ++c) {
        streams.emplace_back(rng::derive_seed(seed, 0x7u), rng::Domain::Metropolis, c);
        states.push_back(start.draw(streams.back()));
    }
    double scale = std::sqrt(model.sigma2);
    for (int round = 0; round < kRounds; ++round) {
        long accepted = 0;
        for (std::size_t c = 0; c < kChains; ++c) {
            auto res = run_chain(model, states[c], kBatch, scale, streams[c]);
            states[c] = std::move(res.state);
            accepted += res.accepted;
        }
        const double rate = static_cast<double>(accepted) / (kChains * kBatch);
        scale *= std::exp(2.0 * (rate - target) / std::sqrt(1.0 + round));
    }
    return scale;
}

SampleMatrix langevin_burn_in(const LangevinModel& model, const SampleMatrix& init, int n_steps, double dt, Seed seed) {
    require(n_steps >= 1, "burn-in needs at least one step");
    auto trajs = simulate(model, init, uniform_times(dt, n_steps), seed);
    return std::move(trajs.positions.back());
}

LangevinModel rescaled_model(const LangevinModel& model, double alpha) {
    require(alpha > 0.0 && std::isfinite(alpha), "rescaling factor must be positive");
    return LangevinModel{scale_potential(model.potential, alpha), alpha * model.sigma2};
}

// ---------------------------------------------------------------- grid density

double GridDensity::spacing(int axis) const { return (upper[axis] - lower[axis]) / (resolution - 1); }

double GridDensity::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dimension(); ++a) {
        v *= spacing(a);
    }
    return v;
}

std::size_t GridDensity::num_nodes() const {
    std::size_t n = 1;
    for (int a = 0; a < dimension(); ++a) {
        n *= static_cast<std::size_t>(resolution);
    }
    return n;
}

Eigen::VectorXd GridDensity::node(std::size_t flat) const {
    const int d = dimension();
    Eigen::VectorXd x(d);
    for (int a = d - 1; a >= 0; --a) {
        x[a] = lower[a] + spacing(a) * static_cast<double>(flat % resolution);
        flat /= resolution;
    }
    return x;
}

double GridDensity::mass() const { return std::accumulate(values.begin(), values.end(), 0.0) * cell_volume(); }

void GridDensity::normalize() {
    const double m = mass();
    require(m > 0.0 && std::isfinite(m), "grid density has no mass");
    for (double& v : values) {
        v /= m;
    }
}

GridDensity tabulate_density(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int resolution,
                             const std::function<double(const Eigen::VectorXd&)>& density) {
    require(lower.size() == upper.size() && lower.size() >= 1, "grid bounds disagree in dimension");
    require((upper - lower).minCoeff() > 0.0, "grid bounds are empty");
    require(resolution >= 2, "grid needs at least two nodes per axis");
    GridDensity g{lower, upper, resolution, {}};
    g.values.resize(g.num_nodes());
    for (std::size_t k = 0; k < g.values.size(); ++k) {
        const double v = density(g.node(k));
        require(v >= 0.0 && std::isfinite(v), "density values must be finite and non-negative");
        g.values[k] = v;
    }
    g.normalize();
    return g;
}

GridDensity gibbs_grid_density(const LangevinModel& model, double half, int resolution) {
    model.validate();
    const int d = model.dimension();
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -half);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, half);
    // Shift by the log-density at the grid's best node so exp() cannot overflow.
    GridDensity probe{lo, hi, resolution, {}};
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < probe.num_nodes(); ++k) {
        top = std::max(top, gibbs_log_density(model, probe.node(k)));
    }
    return tabulate_density(lo, hi, resolution,
                            [&](const Eigen::VectorXd& x) { return std::exp(gibbs_log_density(model, x) - top); });
}

std::vector<double> fp_operator(const Potential& potential, double sigma2, const GridDensity& density,
                                StencilOrder order) {
    const int d = density.dimension();
    require(potential_dimension(potential) == d, "potential and grid differ in dimension");
    require(density.values.size() == density.num_nodes(), "grid density has the wrong number of values");
    const int margin = order == StencilOrder::Second ? 1 : 2;
    const int res = density.resolution;
    require(res > 2 * margin, "grid too coarse for the stencil");

    const std::size_t nodes = density.num_nodes();
    // flux[k * d + a] = p * dPsi/dx_a at node k
    std::vector<double> flux(nodes * d);
    for (std::size_t k = 0; k < nodes; ++k) {
        const Eigen::VectorXd g = eval_gradient(potential, density.node(k));
        for (int a = 0; a < d; ++a) {
            flux[k * d + a] = density.values[k] * g[a];
        }
    }
    std::vector<std::size_t> stride(d);
    std::size_t s = 1;
    for (int a = d - 1; a >= 0; --a) {
        stride[a] = s;
        s *= static_cast<std::size_t>(res);
    }

    std::vector<double> out;
    std::vector<int> idx(d, margin);
    const auto& p = density.values;
    while (true) {
        std::size_t k = 0;
        for (int a = 0; a < d; ++a) {
            k += static_cast<std::size_t>(idx[a]) * stride[a];
        }
        double div = 0.0;
        double lap = 0.0;
        for (int a = 0; a < d; ++a) {
            const double h = density.spacing(a);
            const std::size_t st = stride[a];
            auto f = [&](long off) { return flux[(k + off * static_cast<long>(st)) * d + a]; };
            auto q = [&](long off) { return p[k + off * static_cast<long>(st)]; };
            if (order == StencilOrder::Second) {
                div += (f(1) - f(-1)) / (2.0 * h);
                lap += (q(1) - 2.0 * q(0) + q(-1)) / (h * h);
            } else {
                div += (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h);
                lap += (-q(2) + 16.0 * q(1) - 30.0 * q(0) + 16.0 * q(-1) - q(-2)) / (12.0 * h * h);
            }
        }
        out.push_back(div + 0.5 * sigma2 * lap);

        int a = d - 1;
        while (a >= 0) {
            if (++idx[a] < res - margin) {
                break;
            }
            idx[a] = margin;
            --a;
        }
        if (a < 0) {
            break;
        }
    }
    return out;
}

double fp_residual(const LangevinModel& model, const GridDensity& density, StencilOrder order) {
    model.validate();
    require(density.resolution >= 16, "residual needs at least 16 nodes per axis");
    const auto r = fp_operator(model.potential, model.sigma2, density, order);
    double ss = 0.0;
    for (double v : r) {
        ss += v * v;
    }
    return std::sqrt(ss * density.cell_volume());
}

// ---------------------------------------------------------------- two-sample tests

namespace {

Eigen::MatrixXd pooled_distances(const SampleMatrix& x, const SampleMatrix& y) {
    const Eigen::Index n = x.rows();
    const Eigen::Index total = n + y.rows();
    SampleMatrix z(total, x.cols());
    z.topRows(n) = x;
    z.bottomRows(y.rows()) = y;
    Eigen::MatrixXd dist(total, total);
    for (Eigen::Index j = 0; j < total; ++j) {
        for (Eigen::Index i = 0; i < total; ++i) {
            dist(i, j) = (z.row(i) - z.row(j)).norm();
        }
    }
    return dist;
}

double block_sum(const Eigen::MatrixXd& dist, Eigen::Index r0, Eigen::Index nr, Eigen::Index c0, Eigen::Index nc) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < nc; ++j) {
        for (Eigen::Index i = 0; i < nr; ++i) {
            s += dist(r0 + i, c0 + j);
        }
    }
    return s;
}

} // namespace

double energy_distance(const SampleMatrix& x, const SampleMatrix& y) {
    require(x.rows() >= 1 && y.rows() >= 1, "energy distance needs nonempty samples");
    require(x.cols() == y.cols(), "samples differ in dimension");
    const double n = static_cast<double>(x.rows());
    const double m = static_cast<double>(y.rows());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            sxy += (x.row(i) - y.row(j)).norm();
        }
    }
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            sxx += (x.row(i) - x.row(j)).norm();
        }
    }
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            syy += (y.row(i) - y.row(j)).norm();
        }
    }
    return 2.0 * sxy / (n * m) - sxx / (n * n) - syy / (m * m);
}

TwoSampleResult energy_test(const SampleMatrix& x, const SampleMatrix& y, int permutations, Seed seed) {
    require(x.rows() >= 1 && y.rows() >= 1, "energy test needs nonempty samples");
    require(x.cols() == y.cols(), "samples differ in dimension");
    require(permutations >= 1, "need at least one permutation");
    const Eigen::Index n = x.rows();
    const Eigen::Index m = y.rows();
    const Eigen::Index total = n + m;
    const Eigen::MatrixXd dist = pooled_distances(x, y);
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);

    TwoSampleResult res;
    {
        const double sxx = block_sum(dist, 0, n, 0, n);
        const double syy = block_sum(dist, n, m, n, m);
        const double sxy = block_sum(dist, 0, n, n, m);
        res.statistic = 2.0 * sxy / (nn * mm) - sxx / (nn * nn) - syy / (mm * mm);
    }

    // With labels z = +1 (first group) / -1, the within-group sums follow from
    // the row sums r and one product z' D z.
    const Eigen::VectorXd rows = dist.rowwise().sum();
    const double all = rows.sum();
    std::vector<double> stats(static_cast<std::size_t>(permutations));
    parallel_for(stats.size(), [&](std::size_t b) {
        rng::Stream s(seed, rng::Domain::Permutation, b);
        const auto perm = rng::permutation(static_cast<std::size_t>(total), s);
        Eigen::VectorXd z(total);
        for (Eigen::Index i = 0; i < total; ++i) {
            z[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])] = i < n ? 1.0 : -1.0;
        }
        const double zdz = z.dot(dist * z);
        const double zr = z.dot(rows);
        const double sxx = 0.25 * (all + 2.0 * zr + zdz);
        const double syy = 0.25 * (all - 2.0 * zr + zdz);
        const double sxy = 0.5 * (all - sxx - syy);
        stats[b] = 2.0 * sxy / (nn * mm) - sxx / (nn * nn) - syy / (mm * mm);
    });
    const double eps = 1e-12 * std::max(1.0, std::abs(res.statistic));
    const auto exceed = std::count_if(stats.begin(), stats.end(), [&](double v) { return v >= res.statistic - eps; });
    res.p_value = (1.0 + static_cast<double>(exceed)) / (permutations + 1.0);
    return res;
}

std::vector<StationarityRecord> stationarity_test(const SnapshotSeries& series, int permutations, Seed seed) {
    series.validate();
    require(series.size() >= 2, "stationarity test needs at least two snapshots");
    for (const auto& s : series.samples) {
        require(s.rows() >= 10, "stationarity test needs at least 10 samples per snapshot");
    }
    std::vector<StationarityRecord> out;
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        const auto r = energy_test(series.samples[i], series.samples[i + 1], permutations, rng::derive_seed(seed, i));
        out.push_back({series.times[i], series.times[i + 1], r.statistic, r.p_value});
    }
    return out;
}

} // namespace sdeid
