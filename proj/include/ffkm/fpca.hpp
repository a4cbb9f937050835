#pragma once

#include "ffkm/fdata.hpp"

namespace ffkm {

/// Functional PCA in whitened coefficient space.
struct FpcaResult {
    Matrix B_H;                  // (P*M) x R, orthonormal principal-curve coefficients
    Vector eigenvalues;          // leading R eigenvalues of G_H'G_H, nonincreasing
    Matrix scores;               // F_pca = G_H B_H, N x R
    Vector cumulative_variance;  // length R, fraction of trace(G_H'G_H)
    Vector spectrum;             // every eigenvalue of G_H'G_H, nonincreasing, clamped at 0
    Index numerical_rank = 0;
};

/// Top-R principal curves of a centered dataset.
FpcaResult fpca(const FunctionalDataset& dataset, Index R);

/// Same decomposition on an already whitened (and centered) coefficient matrix.
FpcaResult fpca_matrix(const Matrix& G_H, Index R);

/// Rules for the number of retained components.
struct ComponentRule {
    enum class Kind { fixed, cumulative, mean_eigenvalue };
    Kind kind = Kind::cumulative;
    double cutoff = 0.9;
    Index count = 0;

    static ComponentRule fixed(Index R) { return {Kind::fixed, 0.0, R}; }
    static ComponentRule cumulative(double c) { return {Kind::cumulative, c, 0}; }
    static ComponentRule mean_eigenvalue() { return {Kind::mean_eigenvalue, 0.0, 0}; }
};

/**
 * cumulative(c): smallest R whose leading eigenvalues explain at least a fraction c
 * of the total. mean_eigenvalue: number of eigenvalues strictly above their mean,
 * clamped to at least 1 (with a warning) for a flat spectrum.
 */
Index select_components(const Vector& eigenvalues, const ComponentRule& rule);

}  // namespace ffkm
