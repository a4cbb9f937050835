#include "ffkm/kmeans.hpp"

#include <limits>
#include <string>

#include "ffkm/error.hpp"
#include "ffkm/kernels.hpp"

namespace ffkm {

namespace {

// dist(i, k) = squared distance from point i to centroid k.
void distances_to_centroids(const Matrix& points, const Matrix& centroids, Matrix& dist) {
    const auto n = static_cast<std::size_t>(points.rows());
    const auto d = static_cast<std::size_t>(points.cols());
    dist.resize(points.rows(), centroids.rows());
    Vector center(points.cols());
    for (Index k = 0; k < centroids.rows(); ++k) {
        center = centroids.row(k).transpose();
        kernels::squared_distances(points.data(), n, d, n, center.data(), dist.col(k).data());
    }
}

void nearest_assignment(const Matrix& dist, std::vector<int>& labels) {
    labels.resize(dist.rows());
    for (Index i = 0; i < dist.rows(); ++i) {
        int best = 0;
        double best_d = dist(i, 0);
        for (Index k = 1; k < dist.cols(); ++k) {
            if (dist(i, k) < best_d) {
                best_d = dist(i, k);
                best = static_cast<int>(k);
            }
        }
        labels[i] = best;
    }
}

// Moves the farthest point (from its own centroid) into each empty cluster.
void repair_empty_clusters(const Matrix& dist, Partition& p) {
    for (int e = 0; e < p.K; ++e) {
        if (p.sizes[e] > 0) continue;
        Index far = -1;
        double far_d = -1.0;
        for (Index i = 0; i < p.n_objects(); ++i) {
            const int own = p.labels[i];
            if (p.sizes[own] < 2) continue;
            if (dist(i, own) > far_d) {
                far_d = dist(i, own);
                far = i;
            }
        }
        if (far < 0) {
            throw InputError("cannot fill an empty cluster: fewer objects than clusters");
        }
        --p.sizes[p.labels[far]];
        p.labels[far] = e;
        ++p.sizes[e];
    }
}

// Centroid rows for nonempty clusters; empty clusters get the zero vector.
Matrix partial_means(const Matrix& points, const Partition& p) {
    Matrix sums = Matrix::Zero(p.K, points.cols());
    for (Index i = 0; i < points.rows(); ++i) {
        sums.row(p.labels[i]) += points.row(i);
    }
    for (int k = 0; k < p.K; ++k) {
        if (p.sizes[k] > 0) sums.row(k) /= static_cast<double>(p.sizes[k]);
    }
    return sums;
}

}  // namespace

Matrix cluster_means(const Matrix& points, const Partition& p) {
    if (p.n_objects() != points.rows()) {
        throw InputError("partition size does not match the number of points");
    }
    if (p.has_empty_cluster()) {
        throw InputError("partition has an empty cluster");
    }
    return partial_means(points, p);
}

double within_sse(const Matrix& points, const Partition& p) {
    const Matrix means = cluster_means(points, p);
    double sse = 0.0;
    for (Index i = 0; i < points.rows(); ++i) {
        sse += (points.row(i) - means.row(p.labels[i])).squaredNorm();
    }
    return sse;
}

KmeansResult lloyd(const Matrix& points, const Partition& init, int max_iter) {
    if (init.n_objects() != points.rows()) {
        throw InputError("initial partition size does not match the number of points");
    }
    if (points.rows() < init.K) {
        throw InputError("k-means needs at least K = " + std::to_string(init.K) + " objects");
    }
    Partition current = init;
    Matrix dist;
    if (current.has_empty_cluster()) {
        distances_to_centroids(points, partial_means(points, current), dist);
        repair_empty_clusters(dist, current);
    }
    KmeansResult out;
    std::vector<int> labels;
    for (int iter = 0; iter < max_iter; ++iter) {
        out.iterations = iter + 1;
        distances_to_centroids(points, partial_means(points, current), dist);
        nearest_assignment(dist, labels);
        Partition next(labels, current.K);
        repair_empty_clusters(dist, next);
        if (next.labels == current.labels) {
            break;
        }
        current = std::move(next);
    }
    out.partition = std::move(current);
    out.centroids = cluster_means(points, out.partition);
    out.sse = within_sse(points, out.partition);
    return out;
}

KmeansResult kmeans_single(const Matrix& points, int K, Rng& rng, int max_iter) {
    const Index n = points.rows();
    if (K < 1) {
        throw ConfigError("k-means needs K >= 1");
    }
    if (n < K) {
        throw InputError("k-means needs N >= K (N = " + std::to_string(n) + ", K = " + std::to_string(K) + ")");
    }
    const auto un = static_cast<std::size_t>(n);
    const auto ud = static_cast<std::size_t>(points.cols());

    Matrix centers(K, points.cols());
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));

    Vector nearest = Vector::Constant(n, std::numeric_limits<double>::infinity());
    Vector d(n);
    Vector center(points.cols());
    for (int k = 1; k < K; ++k) {
        center = centers.row(k - 1).transpose();
        kernels::squared_distances(points.data(), un, ud, un, center.data(), d.data());
        nearest = nearest.cwiseMin(d);
        const double total = nearest.sum();
        Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            const double target = u(rng);
            double running = 0.0;
            chosen = n - 1;
            for (Index i = 0; i < n; ++i) {
                running += nearest(i);
                if (running > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        centers.row(k) = points.row(chosen);
    }

    Matrix dist;
    distances_to_centroids(points, centers, dist);
    std::vector<int> labels;
    nearest_assignment(dist, labels);
    Partition init(labels, K);
    repair_empty_clusters(dist, init);
    return lloyd(points, init, max_iter);
}

KmeansResult kmeans(const Matrix& points, int K, int n_starts, std::uint64_t seed, int max_iter) {
    if (n_starts < 1) {
        throw ConfigError("k-means needs at least one start");
    }
    KmeansResult best;
    for (int s = 0; s < n_starts; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        KmeansResult r = kmeans_single(points, K, rng, max_iter);
        if (s == 0 || r.sse < best.sse) {
            best = std::move(r);
        }
    }
    return best;
}

}  // namespace ffkm
