#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ffkm {

using Rng = std::mt19937_64;

/**
 * Derives an independent child seed from a base seed and up to two stream indices.
 *
 * Every random quantity in the library hangs off one user seed through this function:
 * starts of a fit use `derive_seed(seed, start)`, replicates of an experiment use
 * `derive_seed(derive_seed(seed, cell), replicate)`, and so on. The mixing is
 * SplitMix64, so nearby indices give unrelated streams.
 */
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Matrix of iid standard normal draws, filled column by column.
Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace ffkm
