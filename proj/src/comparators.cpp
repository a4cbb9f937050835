#include "ffkm/comparators.hpp"

#include "ffkm/error.hpp"

namespace ffkm {

FitResult fpck_fit(const FunctionalDataset& dataset, const FfkmConfig& config) {
    if (!dataset.centered()) {
        throw InputError("the dataset must be centered before fitting");
    }
    FitResult r = fit_whitened(whiten(dataset).G_H, config, Criterion::fpck);
    r.weights.lambda = dataset.lambda();
    r.weights.P = dataset.n_variables();
    r.weights.M = dataset.basis_size();
    return r;
}

FpckTerms fpck_terms(const Matrix& G_H, const Partition& partition, const Matrix& A_H) {
    const Matrix proj = G_H * A_H * A_H.transpose();
    const Matrix means = cluster_means(proj, partition);
    FpckTerms t;
    t.reconstruction = (G_H - proj).squaredNorm();
    for (Index n = 0; n < proj.rows(); ++n) {
        t.clustering += (proj.row(n) - means.row(partition.labels[n])).squaredNorm();
    }
    return t;
}

FitResult tandem_fit(const FunctionalDataset& dataset, const FfkmConfig& config) {
    if (!dataset.centered()) {
        throw InputError("the dataset must be centered before fitting");
    }
    const Matrix G_H = whiten(dataset).G_H;
    config.validate(G_H.rows(), G_H.cols());
    const FpcaResult pca = fpca_matrix(G_H, config.L);
    KmeansResult km = kmeans(pca.scores, config.K, config.n_starts, config.seed);

    FitResult r;
    r.partition = std::move(km.partition);
    r.weights.A_H = pca.B_H;
    r.weights.lambda = dataset.lambda();
    r.weights.P = dataset.n_variables();
    r.weights.M = dataset.basis_size();
    r.scores = pca.scores;
    r.loss = km.sse;
    r.loss_trace = {km.sse};
    r.n_starts = config.n_starts;
    r.converged = true;
    r.fpca_spectrum = pca.spectrum;
    return r;
}

}  // namespace ffkm
