#ifndef SDEID_POTENTIALS_HPP
#define SDEID_POTENTIALS_HPP

#include "sdeid/types.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

/**
 * @file potentials.hpp
 *
 * @brief Drift potentials: polynomials in monomial coefficients and a set of
 * named closed-form landscapes.
 */

namespace sdeid {

/**
 * @brief Exponent vector of a monomial x^alpha.
 *
 * Ordering is graded lexicographic: lower total degree first, then
 * lexicographically larger exponent vectors first, so for d = 2 the degree-2
 * block reads (2,0), (1,1), (0,2).
 */
struct MultiIndex {
    std::vector<int> exponents;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> e);

    int degree() const;
    std::size_t dimension() const { return exponents.size(); }

    bool operator==(const MultiIndex&) const = default;
};

bool operator<(const MultiIndex& a, const MultiIndex& b);

/// All multi-indices of dimension d with min_degree <= |alpha| <= k in graded lexicographic order.
std::vector<MultiIndex> multi_indices(int d, int k, int min_degree = 1);

/// Number of multi-indices with 1 <= |alpha| <= k.
std::size_t basis_size(int d, int k);

/// x^alpha with the convention x^0 = 1 (also for x_i = 0).
double monomial(const Eigen::Ref<const Eigen::VectorXd>& x, const MultiIndex& alpha);

/**
 * @brief Psi(x) = sum over alpha of theta_alpha x^alpha, with |alpha| <= degree.
 *
 * Zero coefficients are dropped on construction so two potentials with the
 * same nonzero terms compare equal.
 */
class PolynomialPotential {
public:
    PolynomialPotential(int dimension, int degree, std::map<MultiIndex, double> coefficients = {});

    int dimension() const { return dim_; }
    int degree() const { return degree_; }
    const std::map<MultiIndex, double>& coefficients() const { return coeffs_; }

    /// Coefficient of alpha, zero if absent.
    double coefficient(const MultiIndex& alpha) const;

    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Sum of second derivatives.
    double laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    PolynomialPotential scaled(double alpha) const;

    /// Builds the potential whose gradient-basis coefficients are `theta`, in multi_indices(d, k) order.
    static PolynomialPotential from_basis_coefficients(int d, int k, const Eigen::VectorXd& theta);
    /// Inverse of from_basis_coefficients; the constant term is dropped.
    Eigen::VectorXd basis_coefficients() const;

    friend PolynomialPotential operator+(const PolynomialPotential& a, const PolynomialPotential& b);
    friend PolynomialPotential operator-(const PolynomialPotential& a, const PolynomialPotential& b);
    bool operator==(const PolynomialPotential&) const = default;

private:
    void normalize();

    int dim_;
    int degree_;
    std::map<MultiIndex, double> coeffs_;
};

enum class NamedKind { Quadratic, StyblinskiTang, Bohachevsky, WavyPlateau, OakleyOhagan };

std::string to_string(NamedKind kind);
NamedKind named_kind_from_string(const std::string& name);

/**
 * @brief One of the closed-form benchmark landscapes, times a positive scale.
 *
 * All five are sums of one-dimensional terms. Inside the box
 * |x|_inf <= clip_radius they are evaluated exactly. Outside it each
 * coordinate term continues as a quadratic matched in value and slope at the
 * box face, so the gradient stays continuous and grows linearly.
 */
struct NamedPotential {
    NamedKind kind = NamedKind::Quadratic;
    int dimension = 2;
    double clip_radius = 10.0;
    double scale = 1.0;

    double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    double laplacian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Exact polynomial form, available for Quadratic and StyblinskiTang.
    bool is_polynomial() const;
    PolynomialPotential to_polynomial() const;

    bool operator==(const NamedPotential&) const = default;
};

NamedPotential make_named(NamedKind kind, int dimension = 2, double clip_radius = 10.0);

using Potential = std::variant<PolynomialPotential, NamedPotential>;

int potential_dimension(const Potential& p);

/// Psi(x). Throws InputError on dimension mismatch.
double eval_potential(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x);
/// grad Psi(x). Throws InputError on dimension mismatch.
Eigen::VectorXd eval_gradient(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x);
double eval_laplacian(const Potential& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Gradient of every row of `points`, same shape.
SampleMatrix eval_gradients(const Potential& p, const SampleMatrix& points);

Potential scale_potential(const Potential& p, double alpha);

/// Polynomial form if one exists (polynomial potentials and the two polynomial named kinds).
bool as_polynomial(const Potential& p, PolynomialPotential* out);

/**
 * @brief grad x^alpha for every alpha with 1 <= |alpha| <= k, graded lexicographic order.
 *
 * Entry m holds (alpha_1 x^(alpha - e_1), ..., alpha_d x^(alpha - e_d)) for the m-th multi-index.
 */
std::vector<Eigen::VectorXd> gradient_basis(const Eigen::Ref<const Eigen::VectorXd>& x, int d, int k);

/**
 * @brief Stacked gradient basis for a sample cloud.
 *
 * Returns an (N*d) x m matrix; row n*d + i holds the i-th gradient component
 * of every basis function at sample n, so that design * theta stacks grad Psi_theta.
 */
Eigen::MatrixXd gradient_design(const SampleMatrix& points, int k);

struct GrowthReport {
    double growth_constant = 0.0;    ///< max |grad Psi(x)| / (1 + |x|)
    double lipschitz_estimate = 0.0; ///< max |grad Psi(x) - grad Psi(y)| / |x - y| over sampled pairs
    int samples = 0;
};

/// Numerical check of linear gradient growth on the box [-half_side, half_side]^d.
GrowthReport check_growth(const Potential& p, double half_side, int samples, Seed seed);

} // namespace sdeid

#endif
