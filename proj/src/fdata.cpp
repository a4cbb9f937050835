#include "ffkm/fdata.hpp"

#include <string>

#include "ffkm/error.hpp"

namespace ffkm {

Partition::Partition(std::vector<int> l, int k) : labels(std::move(l)), K(k) { recount(); }

void Partition::recount() {
    sizes.assign(K, 0);
    for (int label : labels) {
        if (label < 0 || label >= K) {
            throw InputError("cluster label " + std::to_string(label) + " out of range for K = " +
                             std::to_string(K));
        }
        ++sizes[label];
    }
}

bool Partition::has_empty_cluster() const {
    for (Index s : sizes) {
        if (s == 0) return true;
    }
    return false;
}

FunctionalDataset::FunctionalDataset(std::shared_ptr<const BasisSystem> basis,
                                     std::shared_ptr<const PenalizedGram> metric, Matrix G, Index P,
                                     std::vector<std::string> variable_names, bool centered)
    : basis_(std::move(basis)),
      metric_(std::move(metric)),
      G_(std::move(G)),
      P_(P),
      names_(std::move(variable_names)),
      centered_(centered) {
    if (!basis_ || !metric_) {
        throw InputError("functional dataset needs a basis and a metric");
    }
    if (P_ < 1 || G_.cols() != P_ * basis_->size()) {
        throw InputError("coefficient matrix has " + std::to_string(G_.cols()) + " columns, expected " +
                         std::to_string(P_) + " x " + std::to_string(basis_->size()));
    }
    if (metric_->H_lambda.rows() != basis_->size()) {
        throw InputError("metric does not conform to the basis");
    }
    if (names_.empty()) {
        for (Index p = 0; p < P_; ++p) names_.push_back("var" + std::to_string(p + 1));
    }
    if (static_cast<Index>(names_.size()) != P_) {
        throw InputError("variable name count does not match P");
    }
}

FunctionalDataset fit_coefficients(const CurveSamples& samples, std::shared_ptr<const BasisSystem> basis,
                                   double lambda) {
    samples.validate();
    auto metric = std::make_shared<const PenalizedGram>(penalized_gram(*basis, lambda));
    const Index N = samples.n_objects();
    const Index P = samples.n_variables();
    const Index M = basis->size();
    Matrix G(N, P * M);
    std::vector<std::string> names;
    for (Index p = 0; p < P; ++p) {
        const auto& var = samples.variables[p];
        Smoother sm;
        try {
            sm = smoother_hat_matrix(*basis, var.grid, lambda);
        } catch (const RankDeficiencyError& e) {
            throw RankDeficiencyError(std::string("cannot fit coefficients at lambda = 0: ") + e.what());
        }
        G.middleCols(p * M, M).noalias() = var.values * sm.coef_map.transpose();
        names.push_back(var.name.empty() ? "var" + std::to_string(p + 1) : var.name);
    }
    return FunctionalDataset(std::move(basis), std::move(metric), std::move(G), P, std::move(names));
}

FunctionalDataset center(const FunctionalDataset& d) {
    Matrix G = d.coefficients().rowwise() - d.coefficients().colwise().mean();
    return FunctionalDataset(d.basis_ptr(), d.metric_ptr(), std::move(G), d.n_variables(),
                             d.variable_names(), true);
}

FunctionalDataset standardize(const FunctionalDataset& d) {
    const Matrix S = standardize_columns(whiten(d).G_H);
    const Index M = d.basis_size();
    Matrix G(S.rows(), S.cols());
    for (Index p = 0; p < d.n_variables(); ++p) {
        G.middleCols(p * M, M).noalias() = S.middleCols(p * M, M) * d.metric().isqrt;
    }
    return FunctionalDataset(d.basis_ptr(), d.metric_ptr(), std::move(G), d.n_variables(), d.variable_names(),
                             true);
}

WhitenedView whiten(const FunctionalDataset& d) {
    const Index M = d.basis_size();
    WhitenedView v;
    v.P = d.n_variables();
    v.M = M;
    v.G_H.resize(d.n_objects(), d.dimension());
    for (Index p = 0; p < v.P; ++p) {
        v.G_H.middleCols(p * M, M).noalias() = d.block(p) * d.metric().sqrt;
    }
    return v;
}

Matrix project_scores(const FunctionalDataset& d, const WeightSet& w) {
    if (w.A_H.rows() != d.dimension() || w.P != d.n_variables() || w.M != d.basis_size()) {
        throw InputError("weights (" + std::to_string(w.A_H.rows()) + " rows) do not conform to the dataset (" +
                         std::to_string(d.dimension()) + " coefficients)");
    }
    return whiten(d).G_H * w.A_H;
}

Matrix raw_weight_coefficients(const WeightSet& w, const PenalizedGram& metric) {
    if (metric.isqrt.rows() != w.M) {
        throw InputError("metric does not conform to the weight coefficients");
    }
    Matrix A(w.A_H.rows(), w.A_H.cols());
    for (Index p = 0; p < w.P; ++p) {
        A.middleRows(p * w.M, w.M).noalias() = metric.isqrt * w.A_H.middleRows(p * w.M, w.M);
    }
    return A;
}

Matrix evaluate_curves(const FunctionalDataset& d, Index p, std::span<const double> grid) {
    if (p < 0 || p >= d.n_variables()) {
        throw InputError("variable index out of range");
    }
    return d.block(p) * d.basis().evaluate(grid).transpose();
}

CurveSamples synthesize_curves(const Matrix& G_H, Index P, const BasisSystem& basis,
                               const PenalizedGram& metric, const std::vector<double>& grid) {
    const Index M = basis.size();
    if (G_H.cols() != P * M) {
        throw InputError("synthesize_curves: coefficient blocks do not match the basis size");
    }
    const Matrix Phi = basis.evaluate(grid);
    const Matrix to_curve = metric.isqrt * Phi.transpose();  // M x T
    CurveSamples out;
    for (Index p = 0; p < P; ++p) {
        VariableSamples v;
        v.name = "var" + std::to_string(p + 1);
        v.grid = grid;
        v.values = G_H.middleCols(p * M, M) * to_curve;
        out.variables.push_back(std::move(v));
    }
    return out;
}

}  // namespace ffkm
