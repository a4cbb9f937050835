#pragma once

// Shared test helpers: random instances and fine-grid quadrature oracles.

#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "ffkm/basis.hpp"
#include "ffkm/fdata.hpp"
#include "ffkm/linalg.hpp"
#include "ffkm/rng.hpp"

namespace ffkm::test {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    return v;
}

/// Composite trapezoid weights on an equally spaced grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
    std::vector<double> w(n, h);
    w.front() = w.back() = h / 2.0;
    return w;
}

/// Integral of f * g on a fine trapezoid grid, columns of F and G holding function values.
inline Matrix trapezoid_inner(const Matrix& F, const Matrix& G, const std::vector<double>& w) {
    const Eigen::Map<const Vector> wv(w.data(), static_cast<Index>(w.size()));
    return F.transpose() * wv.asDiagonal() * G;
}

inline Matrix random_orthonormal(Rng& rng, Index rows, Index cols) {
    return orthonormalize(gaussian_matrix(rng, rows, cols));
}

inline Matrix center_columns(const Matrix& X) {
    return X.rowwise() - X.colwise().mean();
}

/// A centered dataset of P variables whose raw coefficients are iid normal.
inline FunctionalDataset random_dataset(Rng& rng, Index N, Index P, int n_knots = 6, int order = 4,
                                        double lambda = 0.0) {
    auto basis = std::make_shared<const BasisSystem>(BasisSystem::bspline({0.0, 1.0}, n_knots, order));
    auto metric = std::make_shared<const PenalizedGram>(penalized_gram(*basis, lambda));
    Matrix G = gaussian_matrix(rng, N, P * basis->size());
    return center(FunctionalDataset(basis, metric, G, P));
}

/**
 * Global FFKM minimum over every partition of the rows into K nonempty clusters.
 * For fixed labels the loss minimized over orthonormal A is the sum of the L
 * smallest eigenvalues of the within-cluster scatter W = sum_n (g_n - mean_k)(g_n - mean_k)'.
 */
inline double exhaustive_ffkm_min(const Matrix& G_H, int K, Index L) {
    const Index N = G_H.rows(), D = G_H.cols();
    std::vector<int> labels(N, 0);
    double best = INFINITY;
    while (true) {
        std::vector<Index> count(K, 0);
        for (int l : labels) ++count[l];
        bool nonempty = true;
        for (Index c : count) nonempty = nonempty && c > 0;
        if (nonempty) {
            Matrix means = Matrix::Zero(K, D);
            for (Index n = 0; n < N; ++n) means.row(labels[n]) += G_H.row(n);
            for (int k = 0; k < K; ++k) means.row(k) /= static_cast<double>(count[k]);
            Matrix W = Matrix::Zero(D, D);
            for (Index n = 0; n < N; ++n) {
                const Vector r = (G_H.row(n) - means.row(labels[n])).transpose();
                W += r * r.transpose();
            }
            const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(W).eigenvalues();
            best = std::min(best, ev.head(L).sum());
        }
        Index i = 0;
        while (i < N && ++labels[i] == K) labels[i++] = 0;
        if (i == N) break;
    }
    return best;
}

/// Relative Frobenius distance.
inline double rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.norm(), 1e-300);
    return (a - b).norm() / scale;
}

}  // namespace ffkm::test
