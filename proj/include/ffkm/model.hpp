#pragma once

#include <vector>

#include "ffkm/linalg.hpp"

namespace ffkm {

/// Crisp assignment of N objects to K clusters. Labels are 0-based internally.
struct Partition {
    std::vector<int> labels;
    std::vector<Index> sizes;
    int K = 0;

    Partition() = default;
    Partition(std::vector<int> labels, int K);

    Index n_objects() const { return static_cast<Index>(labels.size()); }
    bool has_empty_cluster() const;
    void recount();
    bool operator==(const Partition& other) const { return K == other.K && labels == other.labels; }
};

/**
 * Coefficients of the weight functions in whitened coordinates.
 *
 * A_H is (P*M) x L with orthonormal columns; rows are stacked per-variable
 * blocks of length M. The raw basis coefficients of v_lp are
 * H_lambda^{-1/2} times the p-th block of column l.
 */
struct WeightSet {
    Matrix A_H;
    double lambda = 0.0;
    Index P = 1;
    Index M = 0;

    Index L() const { return A_H.cols(); }
};

}  // namespace ffkm
