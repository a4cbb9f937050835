#pragma once

#include <Eigen/Dense>

namespace ffkm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Symmetric square root and pseudo-inverse square root of a PSD matrix.
struct SymmetricRoots {
    Matrix sqrt;
    Matrix isqrt;
    Vector eigenvalues;  // ascending, clamped at 0
};

/**
 * Square roots through a symmetric eigendecomposition.
 *
 * Eigenvalues are clamped to max(eig, 0). The inverse root zeroes every
 * eigenvalue below `pinv_rel_tol * max_eig`, so for a rank-deficient input
 * `isqrt * S * isqrt` is the projector onto range(S).
 */
SymmetricRoots symmetric_roots(const Matrix& S, double pinv_rel_tol = 1e-12);

/// Thin Q factor of a Householder QR; columns span the same space as X.
Matrix orthonormalize(const Matrix& X);

/// Flips each column so its largest-magnitude entry is positive (first index wins ties).
void fix_column_signs(Matrix& A);

/**
 * Eigenvectors of the symmetric matrix S for its `count` algebraically largest
 * eigenvalues, ordered by decreasing eigenvalue, sign-normalized.
 */
Matrix top_eigenvectors(const Matrix& S, Index count, Vector* values = nullptr);

/// U V' from the thin SVD X = U D V'; the orthonormal matrix closest to X.
Matrix polar_orthonormal(const Matrix& X);

/// Column-wise centering and scaling to unit sample variance; zero-variance columns are only centered.
Matrix standardize_columns(const Matrix& X);

}  // namespace ffkm
