#include "ffkm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ffkm/diagnostics.hpp"
#include "ffkm/error.hpp"
#include "ffkm/kernels.hpp"

namespace ffkm {

void CurveSamples::validate() const {
    if (variables.empty()) {
        throw InputError("curve samples contain no variables");
    }
    const Index n = variables.front().values.rows();
    if (n == 0) {
        throw InputError("curve samples contain no objects");
    }
    if (!object_ids.empty() && static_cast<Index>(object_ids.size()) != n) {
        throw InputError("object id count does not match the number of curves");
    }
    for (const auto& v : variables) {
        if (v.values.rows() != n) {
            throw InputError("variable '" + v.name + "' has " + std::to_string(v.values.rows()) +
                             " curves, expected " + std::to_string(n));
        }
        if (static_cast<Index>(v.grid.size()) != v.values.cols()) {
            throw InputError("variable '" + v.name + "': grid length does not match sample count");
        }
        for (std::size_t t = 1; t < v.grid.size(); ++t) {
            if (!(v.grid[t] > v.grid[t - 1])) {
                throw InputError("variable '" + v.name + "': grid is not strictly increasing");
            }
        }
        if (!v.values.allFinite()) {
            throw InputError("variable '" + v.name + "' contains missing or non-finite values");
        }
    }
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
            const double pnm1 = n == 1 ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

BasisSystem BasisSystem::bspline(Domain domain, int n_knots, int order) {
    if (!(std::isfinite(domain.lo) && std::isfinite(domain.hi) && domain.hi > domain.lo)) {
        throw ConfigError("basis domain must be a non-degenerate finite interval");
    }
    if (order < 2) {
        throw ConfigError("B-spline order must be at least 2, got " + std::to_string(order));
    }
    if (n_knots < 2) {
        throw ConfigError("B-spline basis needs at least the two boundary knots, got " +
                          std::to_string(n_knots));
    }
    BasisSystem b;
    b.kind_ = BasisKind::bspline;
    b.order_ = order;
    b.domain_ = domain;
    b.size_ = n_knots - 2 + order;
    b.breakpoints_.resize(n_knots);
    const double width = domain.hi - domain.lo;
    for (int i = 0; i < n_knots; ++i) {
        b.breakpoints_[i] = domain.lo + width * i / (n_knots - 1);
    }
    b.breakpoints_.back() = domain.hi;
    b.knots_.reserve(b.size_ + order);
    b.knots_.insert(b.knots_.end(), order, domain.lo);
    b.knots_.insert(b.knots_.end(), b.breakpoints_.begin() + 1, b.breakpoints_.end() - 1);
    b.knots_.insert(b.knots_.end(), order, domain.hi);
    return b;
}

BasisSystem BasisSystem::fourier(Domain domain, int n_basis) {
    if (!(std::isfinite(domain.lo) && std::isfinite(domain.hi) && domain.hi > domain.lo)) {
        throw ConfigError("basis domain must be a non-degenerate finite interval");
    }
    if (n_basis < 1 || n_basis % 2 == 0) {
        throw ConfigError("Fourier basis size must be odd and positive, got " + std::to_string(n_basis));
    }
    BasisSystem b;
    b.kind_ = BasisKind::fourier;
    b.order_ = 0;
    b.domain_ = domain;
    b.size_ = n_basis;
    const int panels = std::max(8, n_basis);
    b.breakpoints_.resize(panels + 1);
    for (int i = 0; i <= panels; ++i) {
        b.breakpoints_[i] = domain.lo + (domain.hi - domain.lo) * i / panels;
    }
    b.breakpoints_.back() = domain.hi;
    return b;
}

int BasisSystem::max_derivative() const {
    return kind_ == BasisKind::bspline ? order_ - 1 : std::numeric_limits<int>::max();
}

void BasisSystem::eval_bspline_at(double t, int derivative, double* row) const {
    const int k = order_;
    const Index m = size_;
    std::fill(row, row + m, 0.0);
    if (derivative >= k) {
        return;
    }
    const auto& kn = knots_;
    // Span s with kn[s] <= t < kn[s+1]; the right end belongs to the last span.
    Index s = static_cast<Index>(std::upper_bound(kn.begin(), kn.end(), t) - kn.begin()) - 1;
    s = std::clamp<Index>(s, k - 1, m - 1);

    // Cox-de Boor up to order k - derivative.
    const int value_order = k - derivative;
    std::vector<double> b(k, 0.0);
    std::vector<double> next(k, 0.0);
    b[0] = 1.0;
    for (int r = 2; r <= value_order; ++r) {
        for (int q = 0; q < r; ++q) {
            const Index i = s - r + 1 + q;
            double v = 0.0;
            if (q >= 1) {
                const double den = kn[i + r - 1] - kn[i];
                if (den > 0.0) v += (t - kn[i]) / den * b[q - 1];
            }
            if (q <= r - 2) {
                const double den = kn[i + r] - kn[i + 1];
                if (den > 0.0) v += (kn[i + r] - t) / den * b[q];
            }
            next[q] = v;
        }
        std::copy(next.begin(), next.begin() + r, b.begin());
    }
    // Each lifting step differentiates once: D B_{i,r} = (r-1)(B_{i,r-1}/dt_i - B_{i+1,r-1}/dt_{i+1}).
    for (int r = value_order + 1; r <= k; ++r) {
        for (int q = 0; q < r; ++q) {
            const Index i = s - r + 1 + q;
            double v = 0.0;
            if (q >= 1) {
                const double den = kn[i + r - 1] - kn[i];
                if (den > 0.0) v += b[q - 1] / den;
            }
            if (q <= r - 2) {
                const double den = kn[i + r] - kn[i + 1];
                if (den > 0.0) v -= b[q] / den;
            }
            next[q] = (r - 1) * v;
        }
        std::copy(next.begin(), next.begin() + r, b.begin());
    }
    for (int q = 0; q < k; ++q) {
        row[s - k + 1 + q] = b[q];
    }
}

void BasisSystem::eval_fourier_at(double t, int derivative, double* row) const {
    const double width = domain_.hi - domain_.lo;
    const double omega = 2.0 * std::numbers::pi / width;
    const double x = t - domain_.lo;
    row[0] = derivative == 0 ? 1.0 / std::sqrt(width) : 0.0;
    const double amp = std::sqrt(2.0 / width);
    const double shift = derivative * std::numbers::pi / 2.0;
    for (Index j = 1; 2 * j - 1 < size_; ++j) {
        const double w = omega * static_cast<double>(j);
        const double scale = amp * std::pow(w, derivative);
        row[2 * j - 1] = scale * std::sin(w * x + shift);
        row[2 * j] = scale * std::cos(w * x + shift);
    }
}

Matrix BasisSystem::evaluate(std::span<const double> grid, int derivative) const {
    if (derivative < 0) {
        throw ConfigError("derivative order must be nonnegative");
    }
    const double tol = 1e-12 * (domain_.hi - domain_.lo);
    // Row-major scratch so each point writes a contiguous row.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(grid.size(), size_);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        double t = grid[r];
        if (!(t >= domain_.lo - tol && t <= domain_.hi + tol)) {
            throw InputError("grid point " + std::to_string(t) + " lies outside the basis domain [" +
                             std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) + "]");
        }
        t = std::clamp(t, domain_.lo, domain_.hi);
        if (kind_ == BasisKind::bspline) {
            eval_bspline_at(t, derivative, out.row(r).data());
        } else {
            eval_fourier_at(t, derivative, out.row(r).data());
        }
    }
    return out;
}

QuadratureRule BasisSystem::quadrature() const {
    // Degree 2(order - 1) per span needs `order` Gauss points; Fourier panels use 16.
    const int per_panel = kind_ == BasisKind::bspline ? order_ : 16;
    std::vector<double> gx;
    std::vector<double> gw;
    gauss_legendre(per_panel, gx, gw);
    QuadratureRule rule;
    for (std::size_t p = 0; p + 1 < breakpoints_.size(); ++p) {
        const double a = breakpoints_[p];
        const double b = breakpoints_[p + 1];
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (int q = 0; q < per_panel; ++q) {
            rule.nodes.push_back(mid + half * gx[q]);
            rule.weights.push_back(half * gw[q]);
        }
    }
    return rule;
}

BasisSystem make_bspline_basis(Domain domain, int n_knots, int order) {
    return BasisSystem::bspline(domain, n_knots, order);
}

Matrix eval_basis(const BasisSystem& basis, std::span<const double> grid, int derivative) {
    return basis.evaluate(grid, derivative);
}

namespace {

Matrix weighted_cross_product(const BasisSystem& basis, int derivative) {
    const QuadratureRule rule = basis.quadrature();
    const Matrix B = basis.evaluate(rule.nodes, derivative);
    const Eigen::Map<const Vector> w(rule.weights.data(), static_cast<Index>(rule.weights.size()));
    Matrix out = B.transpose() * w.asDiagonal() * B;
    return 0.5 * (out + out.transpose());
}

}  // namespace

GramPair gram_matrix(const BasisSystem& basis) {
    GramPair g;
    g.H = weighted_cross_product(basis, 0);
    SymmetricRoots roots = symmetric_roots(g.H);
    g.H_sqrt = std::move(roots.sqrt);
    g.H_isqrt = std::move(roots.isqrt);
    return g;
}

Matrix penalty_matrix(const BasisSystem& basis) {
    if (basis.max_derivative() < 2) {
        throw UnsupportedBasisError("roughness penalty needs second derivatives; B-spline order " +
                                    std::to_string(basis.order()) + " < 3");
    }
    return weighted_cross_product(basis, 2);
}

PenalizedGram penalized_gram(const BasisSystem& basis, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("roughness penalty must be a finite nonnegative number");
    }
    PenalizedGram g;
    g.lambda = lambda;
    g.H = weighted_cross_product(basis, 0);
    if (lambda > 0.0) {
        g.P2 = penalty_matrix(basis);
        g.H_lambda = g.H + lambda * g.P2;
    } else {
        g.H_lambda = g.H;
    }
    SymmetricRoots roots = symmetric_roots(g.H_lambda);
    g.sqrt = std::move(roots.sqrt);
    g.isqrt = std::move(roots.isqrt);
    return g;
}

Smoother smoother_hat_matrix(const BasisSystem& basis, std::span<const double> grid, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("roughness penalty must be a finite nonnegative number");
    }
    const Matrix Phi = basis.evaluate(grid);
    Matrix normal = Phi.transpose() * Phi;
    if (lambda > 0.0) {
        normal += lambda * penalty_matrix(basis);
    }
    // Rank deficiency lives in Phi'Phi; a positive penalty only lifts directions it does not annihilate,
    // so the relative eigenvalue test is run on the unpenalized part where the penalty cannot hide it.
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(Phi.transpose() * Phi, Eigen::EigenvaluesOnly);
    const double max_eig = eig.eigenvalues().maxCoeff();
    const bool singular = lambda > 0.0 ? normal.llt().info() != Eigen::Success
                                       : !(max_eig > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * max_eig;
    if (singular) {
        throw RankDeficiencyError("smoothing normal matrix is singular (" + std::to_string(grid.size()) +
                                  " grid points, " + std::to_string(basis.size()) +
                                  " basis functions); use lambda > 0 or a denser grid");
    }
    // Least squares on the stacked system [Phi; sqrt(lambda) R] with R'R = P2 keeps the conditioning at
    // the square root of the normal matrix's, which matters for very large lambda.
    const Index T = Phi.rows(), M = Phi.cols();
    Matrix stacked(T + M, M);
    stacked.topRows(T) = Phi;
    if (lambda > 0.0) {
        const Eigen::SelfAdjointEigenSolver<Matrix> pe(penalty_matrix(basis));
        const Vector root = pe.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        stacked.bottomRows(M) = std::sqrt(lambda) * root.asDiagonal() * pe.eigenvectors().transpose();
    } else {
        stacked.bottomRows(M).setZero();
    }
    Matrix rhs = Matrix::Zero(T + M, T);
    rhs.topRows(T).setIdentity();
    Smoother s;
    s.coef_map = stacked.colPivHouseholderQr().solve(rhs);
    s.hat = Phi * s.coef_map;
    return s;
}

GcvResult gcv_select(const CurveSamples& samples, const BasisSystem& basis,
                     std::span<const double> lambda_grid) {
    if (lambda_grid.empty()) {
        throw ConfigError("GCV lambda grid is empty");
    }
    for (double l : lambda_grid) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw ConfigError("GCV lambda grid values must be finite and nonnegative");
        }
    }
    samples.validate();

    GcvResult out;
    out.lambdas.assign(lambda_grid.begin(), lambda_grid.end());
    out.scores.assign(lambda_grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.excluded.assign(lambda_grid.size(), false);

    bool found = false;
    double best_score = 0.0;
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        const double lambda = lambda_grid[i];
        double score = 0.0;
        bool ok = true;
        for (const auto& var : samples.variables) {
            const auto T = static_cast<double>(var.grid.size());
            Smoother sm;
            try {
                sm = smoother_hat_matrix(basis, var.grid, lambda);
            } catch (const RankDeficiencyError&) {
                ok = false;
                break;
            }
            const double trace = sm.hat.trace();
            const double dof_ratio = 1.0 - trace / T;
            if (dof_ratio <= 1e-10) {
                ok = false;
                break;
            }
            const Matrix fitted = var.values * sm.hat.transpose();
            const double rss = kernels::sum_squared_difference(
                std::span<const double>(var.values.data(), var.values.size()),
                std::span<const double>(fitted.data(), fitted.size()));
            score += rss / (T * dof_ratio * dof_ratio);
        }
        if (!ok) {
            out.excluded[i] = true;
            warn("GCV: lambda = " + std::to_string(lambda) +
                 " excluded (smoother trace reaches the number of grid points)");
            continue;
        }
        out.scores[i] = score;
        if (!found || score < best_score || (score == best_score && lambda > out.lambda)) {
            found = true;
            best_score = score;
            out.lambda = lambda;
        }
    }
    if (!found) {
        throw ConfigError("GCV: every lambda on the grid gives a degenerate smoother");
    }
    return out;
}

}  // namespace ffkm
