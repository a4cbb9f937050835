#include "ffkm/fpca.hpp"

#include <string>

#include "ffkm/diagnostics.hpp"
#include "ffkm/error.hpp"

namespace ffkm {

FpcaResult fpca(const FunctionalDataset& dataset, Index R) {
    if (!dataset.centered()) {
        throw InputError("fpca requires a centered dataset");
    }
    return fpca_matrix(whiten(dataset).G_H, R);
}

FpcaResult fpca_matrix(const Matrix& G_H, Index R) {
    const Index D = G_H.cols();
    const Matrix cross = G_H.transpose() * G_H;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(cross);
    if (eig.info() != Eigen::Success) {
        throw InputError("fpca: eigendecomposition failed");
    }
    FpcaResult out;
    out.spectrum = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double top = D > 0 ? out.spectrum(0) : 0.0;
    for (Index i = 0; i < D; ++i) {
        if (out.spectrum(i) > 1e-10 * top) ++out.numerical_rank;
    }
    if (R < 1 || R > out.numerical_rank) {
        throw ConfigError("fpca: requested " + std::to_string(R) + " components but the numerical rank is " +
                          std::to_string(out.numerical_rank));
    }
    out.B_H.resize(D, R);
    for (Index r = 0; r < R; ++r) {
        out.B_H.col(r) = eig.eigenvectors().col(D - 1 - r);
    }
    fix_column_signs(out.B_H);
    out.eigenvalues = out.spectrum.head(R);
    out.scores = G_H * out.B_H;
    const double total = out.spectrum.sum();
    out.cumulative_variance.resize(R);
    double running = 0.0;
    for (Index r = 0; r < R; ++r) {
        running += out.eigenvalues(r);
        out.cumulative_variance(r) = running / total;
    }
    return out;
}

Index select_components(const Vector& eigenvalues, const ComponentRule& rule) {
    if (eigenvalues.size() == 0) {
        throw InputError("select_components: empty spectrum");
    }
    if ((eigenvalues.array() < 0.0).any()) {
        throw InputError("select_components: eigenvalues must be nonnegative");
    }
    const double total = eigenvalues.sum();
    if (!(total > 0.0)) {
        throw InputError("select_components: all eigenvalues are zero");
    }
    switch (rule.kind) {
        case ComponentRule::Kind::fixed:
            if (rule.count < 1 || rule.count > eigenvalues.size()) {
                throw ConfigError("fixed component count " + std::to_string(rule.count) + " out of range");
            }
            return rule.count;
        case ComponentRule::Kind::cumulative: {
            if (!(rule.cutoff > 0.0 && rule.cutoff <= 1.0)) {
                throw ConfigError("cumulative cutoff must lie in (0, 1]");
            }
            double running = 0.0;
            for (Index r = 0; r < eigenvalues.size(); ++r) {
                running += eigenvalues(r);
                // 1e-12 absorbs rounding in the running sum (cutoff 1.0 must be reachable).
                if (running / total >= rule.cutoff - 1e-12) {
                    return r + 1;
                }
            }
            return eigenvalues.size();
        }
        case ComponentRule::Kind::mean_eigenvalue: {
            const double mean = total / static_cast<double>(eigenvalues.size());
            Index count = 0;
            for (Index r = 0; r < eigenvalues.size(); ++r) {
                if (eigenvalues(r) > mean) ++count;
            }
            if (count == 0) {
                warn("mean-eigenvalue rule kept no component (flat spectrum); using R = 1");
                count = 1;
            }
            return count;
        }
    }
    return 1;
}

}  // namespace ffkm
