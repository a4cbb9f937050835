#include "ffkm/ffkm.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "ffkm/diagnostics.hpp"
#include "ffkm/error.hpp"

namespace ffkm {

void FfkmConfig::validate(Index n_objects, Index dimension) const {
    if (K < 2) {
        throw ConfigError("number of clusters K must be at least 2, got " + std::to_string(K));
    }
    if (L < 1 || L > dimension) {
        throw ConfigError("subspace dimension L must lie in [1, " + std::to_string(dimension) + "], got " +
                          std::to_string(L));
    }
    if (n_starts < 1) throw ConfigError("n_starts must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be positive");
    if (!(rel_tol >= 0.0)) throw ConfigError("rel_tol must be nonnegative");
    if (threads < 1) throw ConfigError("threads must be positive");
    if (n_objects < K) {
        throw InputError("need at least K = " + std::to_string(K) + " objects, got " + std::to_string(n_objects));
    }
    if (L > K - 1) {
        warn("L = " + std::to_string(L) + " exceeds K - 1 = " + std::to_string(K - 1) +
             "; the centroid scores have rank at most min(K - 1, L)");
    }
}

namespace {

Matrix between_cross(const Matrix& G_H, const Partition& partition) {
    const Matrix means = cluster_means(G_H, partition);
    Vector sizes(partition.K);
    for (int k = 0; k < partition.K; ++k) sizes(k) = static_cast<double>(partition.sizes[k]);
    return means.transpose() * sizes.asDiagonal() * means;
}

Matrix weight_matrix(const Matrix& G_H, const Matrix& cross, const Partition& partition, Criterion criterion) {
    Matrix S = between_cross(G_H, partition);
    if (criterion == Criterion::ffkm) {
        S -= cross;
    }
    return S;
}

double loss_with_total(const Matrix& scores, double total_ss, const Partition& partition, Criterion criterion) {
    const double within = within_sse(scores, partition);
    if (criterion == Criterion::ffkm) {
        return within;
    }
    // ||G - G A A'||^2 = ||G||^2 - ||G A||^2 for orthonormal A.
    return (total_ss - scores.squaredNorm()) + within;
}

struct StartOutcome {
    Partition partition;
    Matrix A_H;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

StartOutcome run_start(const Matrix& G_H, const Matrix& cross, double total_ss, const FfkmConfig& config,
                       Criterion criterion, int start) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(start)));
    StartOutcome out;
    out.A_H = orthonormalize(gaussian_matrix(rng, G_H.cols(), config.L));
    Matrix scores = G_H * out.A_H;
    out.partition = kmeans_single(scores, config.K, rng).partition;
    double current = loss_with_total(scores, total_ss, out.partition, criterion);
    out.trace.push_back(current);

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        out.iterations = iter;
        out.A_H = top_eigenvectors(weight_matrix(G_H, cross, out.partition, criterion), config.L);
        scores.noalias() = G_H * out.A_H;
        Partition next = lloyd(scores, out.partition).partition;
        const double next_loss = loss_with_total(scores, total_ss, next, criterion);

        // Within-cluster dispersion never exceeds the projected sum of squares.
        const double within = criterion == Criterion::ffkm ? next_loss : within_sse(scores, next);
        const double projected = scores.squaredNorm();
        if (within > projected * (1.0 + 1e-12) + 1e-12) {
            throw std::logic_error("ALS invariant violated: within-cluster loss exceeds projected norm");
        }

        out.trace.push_back(next_loss);
        const bool unchanged = next.labels == out.partition.labels;
        out.partition = std::move(next);
        const double change = std::abs(current - next_loss);
        current = next_loss;
        if (unchanged || change <= config.rel_tol * std::max(std::abs(current), 1e-300)) {
            out.converged = true;
            break;
        }
    }
    out.loss = current;
    return out;
}

FitResult run_als(const Matrix& G_H, const FfkmConfig& config, Criterion criterion) {
    config.validate(G_H.rows(), G_H.cols());
    const Matrix cross = G_H.transpose() * G_H;
    const double total_ss = G_H.squaredNorm();

    std::vector<StartOutcome> outcomes(config.n_starts);
    const int workers = std::min(config.threads, config.n_starts);
    if (workers <= 1) {
        for (int s = 0; s < config.n_starts; ++s) {
            outcomes[s] = run_start(G_H, cross, total_ss, config, criterion, s);
        }
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int s = w; s < config.n_starts; s += workers) {
                        outcomes[s] = run_start(G_H, cross, total_ss, config, criterion, s);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    int best = 0;
    for (int s = 1; s < config.n_starts; ++s) {
        if (outcomes[s].loss < outcomes[best].loss) best = s;
    }

    FitResult result;
    result.n_starts = config.n_starts;
    result.best_start_index = best;
    result.starts.reserve(config.n_starts);
    for (auto& o : outcomes) {
        StartDiagnostics d;
        d.loss = o.loss;
        d.iterations = o.iterations;
        d.converged = o.converged;
        if (config.keep_traces) d.trace = o.trace;
        result.starts.push_back(std::move(d));
    }
    StartOutcome& winner = outcomes[best];
    result.partition = std::move(winner.partition);
    result.loss = winner.loss;
    result.loss_trace = std::move(winner.trace);
    result.converged = winner.converged;
    result.weights.A_H = std::move(winner.A_H);
    result.weights.P = 1;
    result.weights.M = G_H.cols();
    result.scores = G_H * result.weights.A_H;
    return result;
}

void require_centered(const FunctionalDataset& dataset) {
    if (!dataset.centered()) {
        throw InputError("the dataset must be centered before fitting");
    }
}

}  // namespace

double loss(const FunctionalDataset& dataset, const Partition& partition, const WeightSet& weights) {
    return within_sse(project_scores(dataset, weights), partition);
}

double criterion_loss(const Matrix& G_H, const Partition& partition, const Matrix& A_H, Criterion criterion) {
    if (A_H.rows() != G_H.cols()) {
        throw InputError("weights do not conform to the coefficient matrix");
    }
    return loss_with_total(G_H * A_H, G_H.squaredNorm(), partition, criterion);
}

Partition assign_step(const FunctionalDataset& dataset, const WeightSet& weights, int K, const Partition& init) {
    if (init.K != K) {
        throw InputError("initial partition has " + std::to_string(init.K) + " clusters, expected " +
                         std::to_string(K));
    }
    return lloyd(project_scores(dataset, weights), init).partition;
}

Partition assign_step(const FunctionalDataset& dataset, const WeightSet& weights, int K, Rng& rng) {
    return kmeans_single(project_scores(dataset, weights), K, rng).partition;
}

Matrix weight_step_matrix(const Matrix& G_H, const Partition& partition, Criterion criterion) {
    return weight_matrix(G_H, G_H.transpose() * G_H, partition, criterion);
}

WeightSet weight_step(const FunctionalDataset& dataset, const Partition& partition, int L) {
    const Matrix G_H = whiten(dataset).G_H;
    if (L < 1 || L > G_H.cols()) {
        throw InputError("L = " + std::to_string(L) + " exceeds the coefficient dimension " +
                         std::to_string(G_H.cols()));
    }
    WeightSet w;
    w.A_H = top_eigenvectors(weight_step_matrix(G_H, partition), L);
    w.lambda = dataset.lambda();
    w.P = dataset.n_variables();
    w.M = dataset.basis_size();
    return w;
}

FitResult fit_whitened(const Matrix& G_H, const FfkmConfig& config, Criterion criterion) {
    return run_als(G_H, config, criterion);
}

FitResult ffkm_fit(const FunctionalDataset& dataset, const FfkmConfig& config) {
    require_centered(dataset);
    FitResult r = run_als(whiten(dataset).G_H, config, Criterion::ffkm);
    r.weights.lambda = dataset.lambda();
    r.weights.P = dataset.n_variables();
    r.weights.M = dataset.basis_size();
    return r;
}

FitResult ffkm_regularized_fit(const FunctionalDataset& dataset, const FfkmConfig& config) {
    if (dataset.lambda() == 0.0) {
        warn("regularized FFKM called on a dataset with lambda = 0; this is plain FFKM");
    }
    return ffkm_fit(dataset, config);
}

FitResult two_step_ffkm(const FunctionalDataset& dataset, const FfkmConfig& config, const ComponentRule& rule) {
    require_centered(dataset);
    const Matrix G_H = whiten(dataset).G_H;
    const FpcaResult probe = fpca_matrix(G_H, 1);
    const Index R = std::min(select_components(probe.spectrum, rule), probe.numerical_rank);
    if (R < config.L) {
        throw ConfigError("two-step FFKM kept R = " + std::to_string(R) + " components, fewer than L = " +
                          std::to_string(config.L));
    }
    const FpcaResult pca = fpca_matrix(G_H, R);
    FitResult reduced = run_als(pca.scores, config, Criterion::ffkm);

    // Procrustes: SVD of B_H F'F A* = P D Q' gives A_H = P Q'.
    const Matrix target = pca.B_H * (pca.scores.transpose() * pca.scores) * reduced.weights.A_H;

    FitResult r = std::move(reduced);
    r.reduced_dimension = R;
    r.reduced_loss = r.loss;
    r.reduced_weights = std::move(r.weights.A_H);
    r.fpca_spectrum = pca.spectrum;
    r.weights.A_H = polar_orthonormal(target);
    r.weights.lambda = dataset.lambda();
    r.weights.P = dataset.n_variables();
    r.weights.M = dataset.basis_size();
    r.scores = G_H * r.weights.A_H;
    r.loss = within_sse(r.scores, r.partition);
    return r;
}

std::vector<Matrix> weight_functions_on_grid(const WeightSet& weights, const BasisSystem& basis,
                                             const PenalizedGram& metric, std::span<const double> grid) {
    if (weights.M != basis.size()) {
        throw InputError("weights do not conform to the basis");
    }
    const Matrix A = raw_weight_coefficients(weights, metric);
    const Matrix Phi = basis.evaluate(grid);
    std::vector<Matrix> out;
    out.reserve(weights.L());
    for (Index l = 0; l < weights.L(); ++l) {
        Matrix v(weights.P, Phi.rows());
        for (Index p = 0; p < weights.P; ++p) {
            v.row(p) = (Phi * A.col(l).segment(p * weights.M, weights.M)).transpose();
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace ffkm
