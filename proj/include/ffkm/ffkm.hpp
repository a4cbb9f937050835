#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ffkm/fdata.hpp"
#include "ffkm/fpca.hpp"
#include "ffkm/kmeans.hpp"
#include "ffkm/model.hpp"

namespace ffkm {

struct FfkmConfig {
    int K = 2;
    int L = 1;
    int n_starts = 1000;
    int max_iter = 100;
    double rel_tol = 1e-8;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Keep the loss trace of every start, not only the best one.
    bool keep_traces = false;

    /// Throws ConfigError/InputError; warns when L > K - 1 (the centroid rank bound).
    void validate(Index n_objects, Index dimension) const;
};

struct StartDiagnostics {
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // filled only with keep_traces
};

struct FitResult {
    Partition partition;
    WeightSet weights;
    Matrix scores;  // N x L, G_H A_H
    double loss = 0.0;
    std::vector<double> loss_trace;
    int n_starts = 0;
    int best_start_index = 0;
    bool converged = false;
    std::vector<StartDiagnostics> starts;

    // Two-step fits only: the reduced problem that was actually optimized.
    Index reduced_dimension = 0;
    double reduced_loss = std::numeric_limits<double>::quiet_NaN();
    Matrix reduced_weights;  // R x L
    Vector fpca_spectrum;
};

/// Objective minimized by the alternating least-squares driver.
enum class Criterion {
    ffkm,  // within-cluster dispersion of the projected data
    fpck,  // reconstruction error plus projected within-cluster dispersion
};

/// ||G_H A_H - P_U G_H A_H||_F^2. Throws on an empty cluster.
double loss(const FunctionalDataset& dataset, const Partition& partition, const WeightSet& weights);

/// Matrix form of the loss for either criterion on a whitened coefficient matrix.
double criterion_loss(const Matrix& G_H, const Partition& partition, const Matrix& A_H,
                      Criterion criterion = Criterion::ffkm);

/**
 * Partition update for fixed weights: Lloyd k-means on the scores G_H A_H,
 * warm-started from `init`. The distances equal those between the projected
 * coefficient vectors A_H A_H' g_Hn because A_H is orthonormal.
 */
Partition assign_step(const FunctionalDataset& dataset, const WeightSet& weights, int K,
                      const Partition& init);

/// Cold-start variant: k-means++ seeding from `rng`, then Lloyd.
Partition assign_step(const FunctionalDataset& dataset, const WeightSet& weights, int K, Rng& rng);

/**
 * Symmetric matrix whose top-L eigenvectors give the optimal weights for a fixed partition.
 *
 * FFKM: G_H'(P_U - I)G_H. With G_H = [G_H1 ... G_HP] its (p, q) block is
 * G_Hp'(P_U - I)G_Hq, the reduced form of the multivariate block-diagonal
 * operator. FPCK: G_H'P_U G_H.
 */
Matrix weight_step_matrix(const Matrix& G_H, const Partition& partition, Criterion criterion = Criterion::ffkm);

/// Weights for a fixed partition: eigenvectors of the L algebraically largest eigenvalues.
WeightSet weight_step(const FunctionalDataset& dataset, const Partition& partition, int L);

/// Multi-start ALS on a whitened coefficient matrix (P = 1, M = columns of G_H in the result).
FitResult fit_whitened(const Matrix& G_H, const FfkmConfig& config, Criterion criterion = Criterion::ffkm);

/// FFKM on a centered dataset. Each start draws Gaussian weights, orthonormalizes them, then alternates.
FitResult ffkm_fit(const FunctionalDataset& dataset, const FfkmConfig& config);

/**
 * FFKM in the roughness-penalized metric: the dataset's coefficients come from
 * smoothed curves and its metric is H_lambda, so the same ALS runs on G_{H_lambda}.
 */
FitResult ffkm_regularized_fit(const FunctionalDataset& dataset, const FfkmConfig& config);

/**
 * Two-step FFKM: FPCA keeps R components (chosen by `rule`), FFKM runs on the
 * R-dimensional scores, and full-length weights are recovered by the orthogonal
 * Procrustes problem min ||F_pca B_H' A_H - F_pca A_H*||. Requires R >= L.
 */
FitResult two_step_ffkm(const FunctionalDataset& dataset, const FfkmConfig& config,
                        const ComponentRule& rule = ComponentRule::cumulative(0.9));

/// v_lp(t) on a grid: element l of the result is the P x T matrix of variable curves.
std::vector<Matrix> weight_functions_on_grid(const WeightSet& weights, const BasisSystem& basis,
                                             const PenalizedGram& metric, std::span<const double> grid);

}  // namespace ffkm
