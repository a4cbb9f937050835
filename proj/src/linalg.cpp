#include "ffkm/linalg.hpp"

#include <cmath>

#include "ffkm/error.hpp"

namespace ffkm {

SymmetricRoots symmetric_roots(const Matrix& S, double pinv_rel_tol) {
    if (S.rows() != S.cols()) {
        throw InputError("symmetric_roots: matrix is not square");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    if (eig.info() != Eigen::Success) {
        throw InputError("symmetric_roots: eigendecomposition failed");
    }
    Vector values = eig.eigenvalues().cwiseMax(0.0);
    const double max_value = values.size() > 0 ? values.maxCoeff() : 0.0;
    const double cutoff = pinv_rel_tol * max_value;

    Vector root = values.cwiseSqrt();
    Vector inv_root(values.size());
    for (Index i = 0; i < values.size(); ++i) {
        inv_root(i) = values(i) > cutoff && values(i) > 0.0 ? 1.0 / root(i) : 0.0;
    }
    const Matrix& Q = eig.eigenvectors();
    SymmetricRoots out;
    out.sqrt = Q * root.asDiagonal() * Q.transpose();
    out.isqrt = Q * inv_root.asDiagonal() * Q.transpose();
    // Exact symmetry keeps downstream products reproducible.
    out.sqrt = 0.5 * (out.sqrt + out.sqrt.transpose()).eval();
    out.isqrt = 0.5 * (out.isqrt + out.isqrt.transpose()).eval();
    out.eigenvalues = std::move(values);
    return out;
}

Matrix orthonormalize(const Matrix& X) {
    const Eigen::HouseholderQR<Matrix> qr(X);
    return qr.householderQ() * Matrix::Identity(X.rows(), X.cols());
}

void fix_column_signs(Matrix& A) {
    for (Index j = 0; j < A.cols(); ++j) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < A.rows(); ++i) {
            const double a = std::abs(A(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (A.rows() > 0 && A(best, j) < 0.0) {
            A.col(j) = -A.col(j);
        }
    }
}

Matrix top_eigenvectors(const Matrix& S, Index count, Vector* values) {
    if (count < 0 || count > S.rows()) {
        throw InputError("top_eigenvectors: requested " + std::to_string(count) +
                         " eigenvectors of a " + std::to_string(S.rows()) + "-dimensional matrix");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    if (eig.info() != Eigen::Success) {
        throw InputError("top_eigenvectors: eigendecomposition failed");
    }
    const Index n = S.rows();
    Matrix out(n, count);
    if (values != nullptr) {
        values->resize(count);
    }
    // Eigen sorts ascending; walk from the top.
    for (Index j = 0; j < count; ++j) {
        out.col(j) = eig.eigenvectors().col(n - 1 - j);
        if (values != nullptr) {
            (*values)(j) = eig.eigenvalues()(n - 1 - j);
        }
    }
    fix_column_signs(out);
    return out;
}

Matrix polar_orthonormal(const Matrix& X) {
    const Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

Matrix standardize_columns(const Matrix& X) {
    Matrix out = X.rowwise() - X.colwise().mean();
    const double denom = X.rows() > 1 ? static_cast<double>(X.rows() - 1) : 1.0;
    for (Index j = 0; j < out.cols(); ++j) {
        const double sd = std::sqrt(out.col(j).squaredNorm() / denom);
        if (sd > 0.0) {
            out.col(j) /= sd;
        }
    }
    return out;
}

}  // namespace ffkm
