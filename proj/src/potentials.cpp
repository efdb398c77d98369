#include "sdeid/potentials.hpp"
#include "sdeid/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sdeid {

MultiIndex::MultiIndex(std::vector<int> e) : exponents(std::move(e)) {
    for (int a : exponents) {
        require(a >= 0, "multi-index exponents must be non-negative");
    }
}

int MultiIndex::degree() const {
    int s = 0;
    for (int a : exponents) {
        s += a;
    }
    return s;
}

bool operator<(const MultiIndex& a, const MultiIndex& b) {
    const int da = a.degree();
    const int db = b.degree();
    if (da != db) {
        return da < db;
    }
    // larger exponent vectors come first inside a degree block
    return a.exponents > b.exponents;
}

namespace {

void enumerate_degree(int d, int remaining, std::vector<int>& current, std::vector<MultiIndex>& out) {
    const auto pos = static_cast<int>(current.size());
    if (pos == d - 1) {
        current.push_back(remaining);
        out.emplace_back(current);
        current.pop_back();
        return;
    }
    for (int a = remaining; a >= 0; --a) {
        current.push_back(a);
        enumerate_degree(d, remaining - a, current, out);
        current.pop_back();
    }
}

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) {
        r *= x;
    }
    return r;
}

// powers[i][p] = x_i^p for p = 0..k
std::vector<std::vector<double>> power_table(const Eigen::Ref<const Eigen::VectorXd>& x, int k) {
    std::vector<std::vector<double>> t(static_cast<std::size_t>(x.size()), std::vector<double>(k + 1, 1.0));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (int p = 1; p <= k; ++p) {
            t[i][p] = t[i][p - 1] * x[i];
        }
    }
    return t;
}

void check_dim(Eigen::Index got, int want) {
    if (got != want) {
        std::ostringstream os;
        os << "dimension mismatch: point has dimension " << got << ", potential expects " << want;
        throw InputError(os.str());
    }
}

} // namespace

std::vector<MultiIndex> multi_indices(int d, int k, int min_degree) {
    require(d >= 1, "dimension must be positive");
    require(k >= 0, "degree must be non-negative");
    std::vector<MultiIndex> out;
    std::vector<int> current;
    for (int deg = std::max(min_degree, 0); deg <= k; ++deg) {
        enumerate_degree(d, deg, current, out);
    }
    return out;
}

std::size_t basis_size(int d, int k) { return multi_indices(d, k, 1).size(); }

double monomial(const Eigen::Ref<const Eigen::VectorXd>& x, const MultiIndex& alpha) {
    check_dim(x.size(), static_cast<int>(alpha.dimension()));
    double v = 1.0;
    for (std::size_t i = 0; i < alpha.exponents.size(); ++i) {
        v *= ipow(x[static_cast<Eigen::Index>(i)], alpha.exponents[i]);
    }
    return v;
}

// ---------------------------------------------------------------- polynomial

PolynomialPotential::PolynomialPotential(int dimension, int degree, std::map<MultiIndex, double> coefficients)
    : dim_(dimension), degree_(degree), coeffs_(std::move(coefficients)) {
    require(dim_ >= 1, "polynomial dimension must be positive");
    require(degree_ >= 1, "polynomial degree must be positive");
    for (const auto& [alpha, value] : coeffs_) {
        require(static_cast<int>(alpha.dimension()) == dim_, "multi-index length differs from dimension");
        require(alpha.degree() <= degree_, "multi-index degree exceeds polynomial degree");
        require(std::isfinite(value), "polynomial coefficient is not finite");
    }
    normalize();
}

void PolynomialPotential::normalize() { std::erase_if(coeffs_, [](const auto& kv) { return kv.second == 0.0; }); }

double PolynomialPotential::coefficient(const MultiIndex& alpha) const {
    const auto it = coeffs_.find(alpha);
    return it == coeffs_.end() ? 0.0 : it->second;
}

double PolynomialPotential::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dim_);
    const auto pw = power_table(x, degree_);
    double v = 0.0;
    for (const auto& [alpha, theta] : coeffs_) {
        double m = theta;
        for (int i = 0; i < dim_; ++i) {
            m *= pw[i][alpha.exponents[i]];
        }
        v += m;
    }
    return v;
}

Eigen::VectorXd PolynomialPotential::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dim_);
    const auto pw = power_table(x, degree_);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
    for (const auto& [alpha, theta] : coeffs_) {
        for (int i = 0; i < dim_; ++i) {
            const int ai = alpha.exponents[i];
            if (ai == 0) {
                continue;
            }
            double m = theta * ai;
            for (int j = 0; j < dim_; ++j) {
                m *= pw[j][j == i ? ai - 1 : alpha.exponents[j]];
            }
            g[i] += m;
        }
    }
    return g;
}

double PolynomialPotential::laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dim_);
    const auto pw = power_table(x, degree_);
    double lap = 0.0;
    for (const auto& [alpha, theta] : coeffs_) {
        for (int i = 0; i < dim_; ++i) {
            const int ai = alpha.exponents[i];
            if (ai < 2) {
                continue;
            }
            double m = theta * ai * (ai - 1);
            for (int j = 0; j < dim_; ++j) {
                m *= pw[j][j == i ? ai - 2 : alpha.exponents[j]];
            }
            lap += m;
        }
    }
    return lap;
}

PolynomialPotential PolynomialPotential::scaled(double alpha) const {
    auto c = coeffs_;
    for (auto& [_, v] : c) {
        v *= alpha;
    }
    return {dim_, degree_, std::move(c)};
}

PolynomialPotential PolynomialPotential::from_basis_coefficients(int d, int k, const Eigen::VectorXd& theta) {
    const auto idx = multi_indices(d, k, 1);
    require(static_cast<std::size_t>(theta.size()) == idx.size(), "coefficient vector length differs from basis size");
    std::map<MultiIndex, double> c;
    for (std::size_t m = 0; m < idx.size(); ++m) {
        c.emplace(idx[m], theta[static_cast<Eigen::Index>(m)]);
    }
    return {d, k, std::move(c)};
}

Eigen::VectorXd PolynomialPotential::basis_coefficients() const {
    const auto idx = multi_indices(dim_, degree_, 1);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t m = 0; m < idx.size(); ++m) {
        theta[static_cast<Eigen::Index>(m)] = coefficient(idx[m]);
    }
    return theta;
}

namespace {

PolynomialPotential combine(const PolynomialPotential& a, const PolynomialPotential& b, double sign) {
    require(a.dimension() == b.dimension(), "cannot combine polynomials of different dimension");
    auto c = a.coefficients();
    for (const auto& [alpha, v] : b.coefficients()) {
        c[alpha] += sign * v;
    }
    return {a.dimension(), std::max(a.degree(), b.degree()), std::move(c)};
}

} // namespace

PolynomialPotential operator+(const PolynomialPotential& a, const PolynomialPotential& b) { return combine(a, b, 1.0); }
PolynomialPotential operator-(const PolynomialPotential& a, const PolynomialPotential& b) { return combine(a, b, -1.0); }

// ---------------------------------------------------------------- named

std::string to_string(NamedKind kind) {
    switch (kind) {
    case NamedKind::Quadratic: return "quadratic";
    case NamedKind::StyblinskiTang: return "styblinski_tang";
    case NamedKind::Bohachevsky: return "bohachevsky";
    case NamedKind::WavyPlateau: return "wavy_plateau";
    case NamedKind::OakleyOhagan: return "oakley_ohagan";
    }
    return "unknown";
}

NamedKind named_kind_from_string(const std::string& name) {
    for (auto k : {NamedKind::Quadratic, NamedKind::StyblinskiTang, NamedKind::Bohachevsky, NamedKind::WavyPlateau,
                   NamedKind::OakleyOhagan}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InputError("unknown potential kind '" + name + "'");
}

namespace {

struct Term {
    double f, df, d2f;
};

// One-dimensional term of coordinate `i` for each landscape.
Term named_term(NamedKind kind, int i, double x) {
    constexpr double pi = std::numbers::pi;
    switch (kind) {
    case NamedKind::Quadratic:
        return {x * x, 2.0 * x, 2.0};
    case NamedKind::StyblinskiTang:
        return {0.5 * (x * x * x * x - 16.0 * x * x + 5.0 * x), 0.5 * (4.0 * x * x * x - 32.0 * x + 5.0),
                0.5 * (12.0 * x * x - 32.0)};
    case NamedKind::Bohachevsky:
        if (i == 0) {
            return {10.0 * (x * x - 0.3 * std::cos(3.0 * pi * x)), 10.0 * (2.0 * x + 0.9 * pi * std::sin(3.0 * pi * x)),
                    10.0 * (2.0 + 2.7 * pi * pi * std::cos(3.0 * pi * x))};
        }
        return {10.0 * (2.0 * x * x - 0.4 * std::cos(4.0 * pi * x)), 10.0 * (4.0 * x + 1.6 * pi * std::sin(4.0 * pi * x)),
                10.0 * (4.0 + 6.4 * pi * pi * std::cos(4.0 * pi * x))};
    case NamedKind::WavyPlateau:
        return {std::cos(pi * x) + 0.5 * x * x * x * x - 3.0 * x * x + 1.0,
                -pi * std::sin(pi * x) + 2.0 * x * x * x - 6.0 * x, -pi * pi * std::cos(pi * x) + 6.0 * x * x - 6.0};
    case NamedKind::OakleyOhagan:
        return {5.0 * (std::sin(x) + std::cos(x) + x * x + x), 5.0 * (std::cos(x) - std::sin(x) + 2.0 * x + 1.0),
                5.0 * (-std::sin(x) - std::cos(x) + 2.0)};
    }
    return {0.0, 0.0, 0.0};
}

// Exact inside [-R, R]; beyond a face, f(b) + f'(b) u + c u^2 / 2 with u = x - b.
Term clipped_term(NamedKind kind, int i, double x, double radius) {
    if (std::abs(x) <= radius) {
        return named_term(kind, i, x);
    }
    const double b = x > 0 ? radius : -radius;
    const Term edge = named_term(kind, i, b);
    const double c = std::max(std::abs(edge.df) / radius, 1.0);
    const double u = x - b;
    return {edge.f + edge.df * u + 0.5 * c * u * u, edge.df + c * u, c};
}

} // namespace

double NamedPotential::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dimension);
    double v = 0.0;
    for (int i = 0; i < dimension; ++i) {
        v += clipped_term(kind, i, x[i], clip_radius).f;
    }
    return scale * v;
}

Eigen::VectorXd NamedPotential::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dimension);
    Eigen::VectorXd g(dimension);
    for (int i = 0; i < dimension; ++i) {
        g[i] = scale * clipped_term(kind, i, x[i], clip_radius).df;
    }
    return g;
}

double NamedPotential::laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x.size(), dimension);
    double v = 0.0;
    for (int i = 0; i < dimension; ++i) {
        v += clipped_term(kind, i, x[i], clip_radius).d2f;
    }
    return scale * v;
}

bool NamedPotential::is_polynomial() const {
    return kind == NamedKind::Quadratic || kind == NamedKind::StyblinskiTang;
}

PolynomialPotential NamedPotential::to_polynomial() const {
    require(is_polynomial(), to_string(kind) + " has no polynomial form");
    std::map<MultiIndex, double> c;
    auto unit = [&](int i, int p) {
        std::vector<int> e(dimension, 0);
        e[i] = p;
        return MultiIndex(e);
    };
    for (int i = 0; i < dimension; ++i) {
        if (kind == NamedKind::Quadratic) {
            c[unit(i, 2)] = scale;
        } else {
            c[unit(i, 4)] = 0.5 * scale;
            c[unit(i, 2)] = -8.0 * scale;
            c[unit(i, 1)] = 2.5 * scale;
        }
    }
    return {dimension, kind == NamedKind::Quadratic ? 2 : 4, std::move(c)};
}

NamedPotential make_named(NamedKind kind, int dimension, double clip_radius) {
    require(dimension >= 1, "dimension must be positive");
    require(clip_radius > 0.0, "clip_radius must be positive");
    require(kind != NamedKind::Bohachevsky || dimension == 2, "the Bohachevsky potential is two-dimensional");
    return NamedPotential{kind, dimension, clip_radius, 1.0};
}

// ---------------------------------------------------------------- variant helpers

int potential_dimension(const Potential& p) {
    return std::visit(
        [](const auto& q) {
            if constexpr (std::is_same_v<std::decay_t<decltype(q)>, PolynomialPotential>) {
                return q.dimension();
            } else {
                return q.dimension;
            }
        },
        p);
}

double eval_potential(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return std::visit([&](const auto& q) { return q.value(x); }, p);
}

Eigen::VectorXd eval_gradient(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return std::visit([&](const auto& q) { return q.gradient(x); }, p);
}

double eval_laplacian(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return std::visit([&](const auto& q) { return q.laplacian(x); }, p);
}

SampleMatrix eval_gradients(const Potential& p, const SampleMatrix& points) {
    check_dim(points.cols(), potential_dimension(p));
    SampleMatrix g(points.rows(), points.cols());
    for (Eigen::Index n = 0; n < points.rows(); ++n) {
        g.row(n) = eval_gradient(p, points.row(n).transpose()).transpose();
    }
    return g;
}

Potential scale_potential(const Potential& p, double alpha) {
    if (const auto* poly = std::get_if<PolynomialPotential>(&p)) {
        return poly->scaled(alpha);
    }
    auto named = std::get<NamedPotential>(p);
    named.scale *= alpha;
    return named;
}

bool as_polynomial(const Potential& p, PolynomialPotential* out) {
    if (const auto* poly = std::get_if<PolynomialPotential>(&p)) {
        if (out) {
            *out = *poly;
        }
        return true;
    }
    const auto& named = std::get<NamedPotential>(p);
    if (!named.is_polynomial()) {
        return false;
    }
    if (out) {
        *out = named.to_polynomial();
    }
    return true;
}

std::vector<Eigen::VectorXd> gradient_basis(const Eigen::Ref<const Eigen::VectorXd>& x, int d, int k) {
    check_dim(x.size(), d);
    const auto idx = multi_indices(d, k, 1);
    const auto pw = power_table(x, k);
    std::vector<Eigen::VectorXd> out;
    out.reserve(idx.size());
    for (const auto& alpha : idx) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) {
            const int ai = alpha.exponents[i];
            if (ai == 0) {
                continue;
            }
            double m = ai;
            for (int j = 0; j < d; ++j) {
                m *= pw[j][j == i ? ai - 1 : alpha.exponents[j]];
            }
            g[i] = m;
        }
        out.push_back(std::move(g));
    }
    return out;
}

Eigen::MatrixXd gradient_design(const SampleMatrix& points, int k) {
    const auto d = static_cast<int>(points.cols());
    const auto idx = multi_indices(d, k, 1);
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd design(points.rows() * d, m);
    for (Eigen::Index n = 0; n < points.rows(); ++n) {
        const auto pw = power_table(points.row(n).transpose(), k);
        for (Eigen::Index c = 0; c < m; ++c) {
            const auto& alpha = idx[static_cast<std::size_t>(c)];
            for (int i = 0; i < d; ++i) {
                const int ai = alpha.exponents[i];
                double v = 0.0;
                if (ai > 0) {
                    v = ai;
                    for (int j = 0; j < d; ++j) {
                        v *= pw[j][j == i ? ai - 1 : alpha.exponents[j]];
                    }
                }
                design(n * d + i, c) = v;
            }
        }
    }
    return design;
}

GrowthReport check_growth(const Potential& p, double half_side, int samples, Seed seed) {
    require(half_side > 0.0 && samples >= 2, "growth check needs a positive box and at least two samples");
    const int d = potential_dimension(p);
    rng::Stream stream(seed, rng::Domain::Initial, 0);
    GrowthReport rep;
    rep.samples = samples;
    Eigen::VectorXd prev_x(d), prev_g(d);
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) {
            x[i] = half_side * (2.0 * stream.uniform() - 1.0);
        }
        const Eigen::VectorXd g = eval_gradient(p, x);
        rep.growth_constant = std::max(rep.growth_constant, g.norm() / (1.0 + x.norm()));
        if (s > 0) {
            const double dx = (x - prev_x).norm();
            if (dx > 0.0) {
                rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, (g - prev_g).norm() / dx);
            }
        }
        prev_x = x;
        prev_g = g;
    }
    return rep;
}

} // namespace sdeid
