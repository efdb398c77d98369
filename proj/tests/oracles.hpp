#ifndef SDEID_TESTS_ORACLES_HPP
#define SDEID_TESTS_ORACLES_HPP

// Reference computations written directly from the defining formulas. They
// share no code with the library beyond the basic types, so a test that
// compares the two checks the library against an independent derivation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

using Fn = std::function<double(const Eigen::VectorXd&)>;

// Central differences with a step proportional to the coordinate scale.
inline Eigen::VectorXd fd_gradient(const Fn& f, const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        Eigen::VectorXd a = x, b = x;
        a[i] += step;
        b[i] -= step;
        g[i] = (f(a) - f(b)) / (2.0 * step);
    }
    return g;
}

// Closed forms of the benchmark landscapes, written term by term.
inline double quadratic(const Eigen::VectorXd& x) { return x.squaredNorm(); }

inline double styblinski_tang(const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        s += std::pow(x[i], 4) - 16.0 * x[i] * x[i] + 5.0 * x[i];
    }
    return 0.5 * s;
}

// Energy distance by the naive double sums.
template <typename M>
double energy_distance(const M& x, const M& y) {
    auto mean_dist = [](const M& a, const M& b) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < b.rows(); ++j) {
                s += (a.row(i) - b.row(j)).norm();
            }
        }
        return s / static_cast<double>(a.rows() * b.rows());
    };
    return 2.0 * mean_dist(x, y) - mean_dist(x, x) - mean_dist(y, y);
}

// Exact discrete OT with uniform weights by enumerating every permutation (tiny n only).
inline std::vector<std::size_t> exact_assignment(const Eigen::MatrixXd& cost) {
    std::vector<std::size_t> perm(static_cast<std::size_t>(cost.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = INFINITY;
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            c += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
        }
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Least squares for a full quadratic potential in two dimensions from paired
// steps: grad Psi = (t10 + 2 t20 x + t11 y, t01 + t11 x + 2 t02 y), unknowns
// ordered (t10, t01, t20, t11, t02). Normal equations built by hand.
template <typename M>
Eigen::VectorXd quadratic_drift_lsq(const M& x0, const M& x1, double dt) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
    for (Eigen::Index n = 0; n < x0.rows(); ++n) {
        const double x = x0(n, 0), y = x0(n, 1);
        const double vx = -(x1(n, 0) - x) / dt, vy = -(x1(n, 1) - y) / dt;
        const double gx[5] = {1, 0, 2 * x, y, 0};
        const double gy[5] = {0, 1, 0, x, 2 * y};
        for (int i = 0; i < 5; ++i) {
            b[i] += gx[i] * vx + gy[i] * vy;
            for (int j = 0; j < 5; ++j) {
                A(i, j) += gx[i] * gx[j] + gy[i] * gy[j];
            }
        }
    }
    return A.ldlt().solve(b);
}

// Residual variance per coordinate and unit time for the fit above.
template <typename M>
double quadratic_sigma2(const M& x0, const M& x1, double dt, const Eigen::VectorXd& t) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < x0.rows(); ++n) {
        const double x = x0(n, 0), y = x0(n, 1);
        const double gx = t[0] + 2 * t[2] * x + t[3] * y;
        const double gy = t[1] + t[3] * x + 2 * t[4] * y;
        const double rx = x1(n, 0) - x + dt * gx;
        const double ry = x1(n, 1) - y + dt * gy;
        s += rx * rx + ry * ry;
    }
    return s / (2.0 * dt * static_cast<double>(x0.rows()));
}

// Second moment of Unif([-r, r]).
inline double uniform_second_moment(double r) { return r * r / 3.0; }

// Variance per coordinate of the Gibbs law exp(-2|x|^2 / sigma2).
inline double quadratic_gibbs_variance(double sigma2) { return sigma2 / 4.0; }

// Ordinary least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

} // namespace oracle

#endif
