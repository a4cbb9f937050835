#pragma once

#include "ffkm/ffkm.hpp"

namespace ffkm {

/**
 * Functional principal component k-means.
 *
 * Minimizes ||G_H - G_H A_H A_H'||^2 + ||G_H A_H A_H' - P_U G_H A_H A_H'||^2.
 * For fixed U the loss equals tr(G_H'G_H) - tr(A_H'G_H'P_U G_H A_H), so the
 * weight step takes the top-L eigenvectors of G_H'P_U G_H; for fixed A_H the
 * partition step is k-means on G_H A_H. `loss` holds the two-term total.
 */
FitResult fpck_fit(const FunctionalDataset& dataset, const FfkmConfig& config);

/// The two loss terms of FPCK at (U, A_H): reconstruction error and projected within-cluster dispersion.
struct FpckTerms {
    double reconstruction = 0.0;
    double clustering = 0.0;
};

FpckTerms fpck_terms(const Matrix& G_H, const Partition& partition, const Matrix& A_H);

/**
 * Tandem analysis: FPCA with L components, then k-means (config.n_starts starts)
 * on the component scores. The weights are the principal-curve coefficients B_H.
 */
FitResult tandem_fit(const FunctionalDataset& dataset, const FfkmConfig& config);

}  // namespace ffkm
