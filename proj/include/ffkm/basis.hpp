#pragma once

#include <span>
#include <vector>

#include "ffkm/linalg.hpp"
#include "ffkm/samples.hpp"

namespace ffkm {

struct Domain {
    double lo = 0.0;
    double hi = 1.0;
};

enum class BasisKind { bspline, fourier };

/// Nodes and weights of a composite quadrature rule over the basis domain.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/**
 * A finite basis phi_1..phi_M over a closed interval.
 *
 * B-spline bases are built from equally spaced breakpoints (the "knots" count
 * includes both boundary knots); the boundary knots are replicated `order`
 * times in the extended knot vector, giving M = n_knots - 2 + order.
 * Fourier bases are orthonormal in L2 over the domain: a constant followed by
 * sine/cosine pairs of increasing frequency, M odd.
 */
class BasisSystem {
public:
    static BasisSystem bspline(Domain domain, int n_knots, int order);
    static BasisSystem fourier(Domain domain, int n_basis);

    BasisKind kind() const { return kind_; }
    int order() const { return order_; }
    Index size() const { return size_; }
    const Domain& domain() const { return domain_; }

    /// Breakpoints including both domain ends (B-splines) or panel edges (Fourier).
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    /// Extended knot vector of length M + order (B-splines only).
    const std::vector<double>& knots() const { return knots_; }

    /// T x M matrix of the `derivative`-th derivative of each basis function at each grid point.
    Matrix evaluate(std::span<const double> grid, int derivative = 0) const;

    /// Composite Gauss-Legendre rule, exact for products of two basis functions (B-splines).
    QuadratureRule quadrature() const;

    /// Highest derivative order the basis supports piecewise.
    int max_derivative() const;

private:
    BasisSystem() = default;

    void eval_bspline_at(double t, int derivative, double* row) const;
    void eval_fourier_at(double t, int derivative, double* row) const;

    BasisKind kind_ = BasisKind::bspline;
    int order_ = 4;
    Index size_ = 0;
    Domain domain_;
    std::vector<double> breakpoints_;
    std::vector<double> knots_;
};

/// B-spline basis with `n_knots` equally spaced breakpoints (boundary included).
BasisSystem make_bspline_basis(Domain domain, int n_knots, int order);

/// Phi[t][m] = phi_m(grid[t]); grid points must lie in the domain.
Matrix eval_basis(const BasisSystem& basis, std::span<const double> grid, int derivative = 0);

/// H = <phi_i, phi_j> with its symmetric square root and pseudo-inverse square root.
struct GramPair {
    Matrix H;
    Matrix H_sqrt;
    Matrix H_isqrt;
};

GramPair gram_matrix(const BasisSystem& basis);

/// P2[i][j] = integral of D^2 phi_i * D^2 phi_j. Needs second derivatives (order >= 3).
Matrix penalty_matrix(const BasisSystem& basis);

/**
 * The metric of the roughness-penalized inner product
 * <x, y>_lambda = <x, y> + lambda <D^2 x, D^2 y>, expressed on basis coefficients.
 *
 * For lambda = 0 the penalty is not assembled and H_lambda is H exactly.
 */
struct PenalizedGram {
    double lambda = 0.0;
    Matrix H;
    Matrix P2;  // empty when lambda == 0
    Matrix H_lambda;
    Matrix sqrt;
    Matrix isqrt;
};

PenalizedGram penalized_gram(const BasisSystem& basis, double lambda);

/// Penalized least-squares smoother on a fixed grid.
struct Smoother {
    Matrix hat;        // Gamma_lambda, T x T
    Matrix coef_map;   // (Phi'Phi + lambda P2)^-1 Phi', M x T
};

Smoother smoother_hat_matrix(const BasisSystem& basis, std::span<const double> grid, double lambda);

struct GcvResult {
    double lambda = 0.0;          // selected value
    std::vector<double> lambdas;  // the grid, in input order
    std::vector<double> scores;   // NaN where excluded
    std::vector<bool> excluded;   // degenerate denominator (trace >= T)
};

/// Selects the roughness penalty minimizing the summed GCV score of every curve; ties go to the larger lambda.
GcvResult gcv_select(const CurveSamples& samples, const BasisSystem& basis,
                     std::span<const double> lambda_grid);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace ffkm
