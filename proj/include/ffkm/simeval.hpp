#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffkm/fdata.hpp"
#include "ffkm/ffkm.hpp"
#include "ffkm/rng.hpp"

namespace ffkm::sim {

enum class Rank { FR, RD };

std::string rank_name(Rank r);
Rank parse_rank(const std::string& s);

/// One cell of the simulation design together with its fixed shape parameters.
struct SimDesign {
    int N = 100;
    double PO = 0.0001;
    Rank rank_G1 = Rank::FR;
    Rank rank_G2 = Rank::FR;
    int NN = 0;
    int K = 4;
    int L = 2;
    int M = 10;
    int T = 100;
    int n_knots = 8;
    int order = 4;

    void validate() const;
    /// Columns of G1: 2 when full rank, 5 when rank deficient.
    int M1() const { return rank_G1 == Rank::FR ? 2 : 5; }
    /// Short identifier such as "N100_PO0.0001_FR-FR_NN0".
    std::string label() const;
};

/// Distance between adjacent square-corner means whose pairwise overlap 2*Phi(-d/2) equals PO.
double separation_for_overlap(double PO);

struct ClusterScores {
    Matrix F;             // N x 2
    Partition partition;  // planted labels
    Matrix means;         // K x 2
};

/**
 * Four bivariate normal clusters with identity covariance and means at
 * (+-d/2, +-d/2). Sizes are N/4, the first N mod 4 clusters taking one extra.
 */
ClusterScores generate_cluster_scores(Index N, int K, double PO, Rng& rng);

/// A simulated dataset with everything needed to score a fit against it.
struct SimTruth {
    Matrix F;                    // planted scores, N x L
    Partition planted;           // generating labels
    Partition reference;         // k-means (100 starts) on F, the target for ARI
    Matrix A1;                   // M1 x L orthonormal
    Matrix G_H;                  // standardized coefficients used to synthesize the curves, N x (P*M)
    Matrix A_true;               // (P*M) x L orthonormal, the cluster subspace of G_H
    CurveSamples curves;         // discretized curves on t = 1..T
    std::shared_ptr<const FunctionalDataset> dataset;  // curves refit at lambda = 0, centered
};

SimTruth generate_dataset(const SimDesign& design, Rng& rng);

/**
 * Masking-noise scenario: a 2-column cluster block standardized to unit
 * variance next to a block of iid N(0, noise_sd^2) columns, carried through
 * an order-4 B-spline basis of size 2 + noise_columns.
 */
struct Example1Design {
    int N = 100;
    int K = 4;
    double PO = 0.0001;
    int noise_columns = 4;
    double noise_sd = 2.0;
    int T = 100;
};

SimTruth generate_example1(const Example1Design& design, Rng& rng);

/// Hubert-Arabie adjusted Rand index. Equals 1 when both partitions are trivial in the same way.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);
double adjusted_rand_index(const Partition& a, const Partition& b);

/**
 * Procrustes-aligned root mean squared error between weight sets.
 *
 * Rows are whitened coefficients, so the Euclidean inner product is the L^P
 * inner product of the weight functions; pass `metric` when it is not. The
 * estimate is rotated by R = polar(A_est' W A_true), then
 * RMSE = sqrt(sum_l ||a_true_l - (A_est R)_l||_W^2 / L).
 */
double weight_rmse(const Matrix& A_true, const Matrix& A_est, const Matrix* metric = nullptr);

enum class Method { ffkm, ffkm2, fpck, tandem };

std::string method_name(Method m);
/// Throws ConfigError listing the valid names.
Method parse_method(const std::string& s);
const std::vector<Method>& all_methods();

struct ExperimentConfig {
    std::vector<Method> methods = all_methods();
    int replicates = 20;
    std::uint64_t seed = 0;
    int starts_ffkm = 1000;  // FFKM and the FFKM stage of the two-step method
    int starts_other = 100;  // FPCK, and the k-means of tandem analysis
    int max_iter = 100;
    double two_step_cutoff = 0.9;
    int threads = 1;
    bool timing = true;
};

struct ResultRow {
    SimDesign design;
    int replicate = 0;
    Method method = Method::ffkm;
    double ari = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double loss = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> runtime_ms;
    bool converged = false;
    std::string error;  // empty on success
};

/// Every combination of N, PO, (rank G1, rank G2) and NN: 3 * 4 * 4 * 3 = 144 cells.
std::vector<SimDesign> enumerate_cells();

/// The reduced grid: N = 100, PO in {0.0001, 0.15}, rank pairs FR-FR, RD-FR and FR-RD, NN in {0, 2}.
std::vector<SimDesign> desk_cells();

/// Seed of a cell, derived from its factor levels so that subsets of cells reproduce.
std::uint64_t cell_seed(std::uint64_t seed, const SimDesign& design);

/// Fits every method to one replicate of one cell.
std::vector<ResultRow> run_replicate(const SimDesign& design, int replicate, const ExperimentConfig& config);

using Progress = std::function<void(std::size_t done, std::size_t total)>;

/// All cells x replicates x methods. A failing fit is recorded in its row and the run continues.
std::vector<ResultRow> run_experiment(const std::vector<SimDesign>& cells, const ExperimentConfig& config,
                                      const Progress& progress = {});

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

/// Boxplot statistics with medcouple-adjusted whiskers for skewed samples.
struct BoxStats {
    std::size_t n = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double medcouple = 0.0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;
};

/// NaN values are dropped; an empty sample gives n = 0 and NaN statistics.
BoxStats box_stats(std::vector<double> values);

/// Robust skewness: median of the kernel h(x_i, x_j) over pairs straddling the median.
double medcouple(std::vector<double> values);

/// Per-cell, per-method ARI and RMSE box statistics.
nlohmann::json summarize(const std::vector<ResultRow>& rows);

}  // namespace ffkm::sim
