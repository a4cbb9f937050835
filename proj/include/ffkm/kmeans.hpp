#pragma once

#include <cstdint>

#include "ffkm/model.hpp"
#include "ffkm/rng.hpp"

namespace ffkm {

struct KmeansResult {
    Partition partition;
    Matrix centroids;  // K x d
    double sse = 0.0;
    int iterations = 0;
};

/// Cluster means (K x d) of the rows of `points`; every cluster must be nonempty.
Matrix cluster_means(const Matrix& points, const Partition& partition);

/// Sum over objects of the squared distance to the own cluster mean.
double within_sse(const Matrix& points, const Partition& partition);

/**
 * Lloyd iterations warm-started from `init`.
 *
 * Points go to the nearest centroid, the lowest cluster index winning exact
 * ties. A cluster left empty receives the point farthest from its own
 * centroid (taken from a cluster with at least two members). The returned SSE
 * never exceeds that of `init`.
 */
KmeansResult lloyd(const Matrix& points, const Partition& init, int max_iter = 300);

/// One k-means++ seeding followed by Lloyd iterations.
KmeansResult kmeans_single(const Matrix& points, int K, Rng& rng, int max_iter = 300);

/// Best of `n_starts` seeded runs; start s uses derive_seed(seed, s). Requires N >= K.
KmeansResult kmeans(const Matrix& points, int K, int n_starts, std::uint64_t seed, int max_iter = 300);

}  // namespace ffkm
