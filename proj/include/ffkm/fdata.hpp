#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ffkm/basis.hpp"
#include "ffkm/model.hpp"
#include "ffkm/samples.hpp"

namespace ffkm {

/**
 * Basis coefficients of N objects with P functional variables.
 *
 * G is N x (P*M): row n holds the coefficient blocks g_n1, ..., g_nP.
 * All variables share one basis and one metric H_lambda. The dataset is
 * immutable; centering returns a new dataset.
 */
class FunctionalDataset {
public:
    FunctionalDataset(std::shared_ptr<const BasisSystem> basis, std::shared_ptr<const PenalizedGram> metric,
                      Matrix G, Index P, std::vector<std::string> variable_names = {},
                      bool centered = false);

    Index n_objects() const { return G_.rows(); }
    Index n_variables() const { return P_; }
    Index basis_size() const { return basis_->size(); }
    Index dimension() const { return G_.cols(); }
    double lambda() const { return metric_->lambda; }
    bool centered() const { return centered_; }

    const Matrix& coefficients() const { return G_; }
    const BasisSystem& basis() const { return *basis_; }
    const PenalizedGram& metric() const { return *metric_; }
    const std::shared_ptr<const BasisSystem>& basis_ptr() const { return basis_; }
    const std::shared_ptr<const PenalizedGram>& metric_ptr() const { return metric_; }
    const std::vector<std::string>& variable_names() const { return names_; }

    auto block(Index p) const { return G_.middleCols(p * basis_size(), basis_size()); }

private:
    std::shared_ptr<const BasisSystem> basis_;
    std::shared_ptr<const PenalizedGram> metric_;
    Matrix G_;
    Index P_;
    std::vector<std::string> names_;
    bool centered_;
};

/// Per-curve penalized least squares: g_np = (Phi'Phi + lambda P2)^-1 Phi' x_np. Metric is H_lambda.
FunctionalDataset fit_coefficients(const CurveSamples& samples, std::shared_ptr<const BasisSystem> basis,
                                   double lambda);

/// Subtracts column means of G (equivalently the mean function of every variable). Idempotent.
FunctionalDataset center(const FunctionalDataset& dataset);

/**
 * Rescales every whitened coefficient column to unit sample variance (N - 1
 * divisor) after centering. Zero-variance columns are only centered. The
 * result is centered; its coefficients are mapped back through H_lambda^{-1/2}.
 */
FunctionalDataset standardize(const FunctionalDataset& dataset);

/// G_H: each M-column block right-multiplied by H_lambda^{1/2}.
struct WhitenedView {
    Matrix G_H;
    Index P = 1;
    Index M = 0;
};

WhitenedView whiten(const FunctionalDataset& dataset);

/// Component scores F = G_H A_H, i.e. f_nl = <x_n, v_l>_lambda summed over variables.
Matrix project_scores(const FunctionalDataset& dataset, const WeightSet& weights);

/// Raw basis coefficients of the weight functions: blockwise H_lambda^{-1/2} A_H.
Matrix raw_weight_coefficients(const WeightSet& weights, const PenalizedGram& metric);

/// Curves x = Phi g for every object, on the given grid (N x T), for variable p.
Matrix evaluate_curves(const FunctionalDataset& dataset, Index p, std::span<const double> grid);

/// Synthesizes curves X = G_H H^{-1/2} Phi' on `grid`, one variable per M-column block of G_H.
CurveSamples synthesize_curves(const Matrix& G_H, Index P, const BasisSystem& basis,
                               const PenalizedGram& metric, const std::vector<double>& grid);

}  // namespace ffkm
