#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ffkm/diagnostics.hpp"
#include "ffkm/error.hpp"
#include "ffkm/fpca.hpp"
#include "support.hpp"

using namespace ffkm;
using ffkm::test::rel_diff;

TEST_CASE("exact rank-2 data is reconstructed from two components") {
    Rng rng(1);
    const Matrix G_H = ffkm::test::center_columns(gaussian_matrix(rng, 30, 2) * gaussian_matrix(rng, 2, 9));
    const FpcaResult r = fpca_matrix(G_H, 2);
    CHECK(rel_diff(G_H, G_H * r.B_H * r.B_H.transpose()) < 1e-8);
    CHECK(r.numerical_rank == 2);
    CHECK(std::abs(r.cumulative_variance(1) - 1.0) < 1e-12);
}

TEST_CASE("eigenvalues are the squared singular values") {
    Rng rng(2);
    const Matrix G_H = gaussian_matrix(rng, 25, 8);
    const FpcaResult r = fpca_matrix(G_H, 8);
    const Vector sv = Eigen::JacobiSVD<Matrix>(G_H).singularValues();
    for (Index i = 0; i < 8; ++i) {
        CHECK(std::abs(r.eigenvalues(i) - sv(i) * sv(i)) < 1e-8 * sv(0) * sv(0));
        CHECK(std::abs(r.spectrum(i) - sv(i) * sv(i)) < 1e-8 * sv(0) * sv(0));
    }
}

TEST_CASE("diagonal covariance gives coordinate principal directions") {
    Rng rng(3);
    Matrix G = gaussian_matrix(rng, 200, 4);
    G = orthonormalize(ffkm::test::center_columns(G));
    const Vector scale = (Vector(4) << 1.0, 5.0, 2.0, 0.5).finished();
    const Matrix G_H = G * scale.asDiagonal();
    const FpcaResult r = fpca_matrix(G_H, 3);
    const int order[] = {1, 2, 0};
    for (int l = 0; l < 3; ++l) {
        CHECK(std::abs(std::abs(r.B_H(order[l], l)) - 1.0) < 1e-10);
    }
}

TEST_CASE("principal subspace beats random subspaces of the same size") {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix G_H = gaussian_matrix(rng, 20, 7) * gaussian_matrix(rng, 7, 7);
        const FpcaResult r = fpca_matrix(G_H, 3);
        const double best = (G_H - G_H * r.B_H * r.B_H.transpose()).squaredNorm();
        for (int k = 0; k < 100; ++k) {
            const Matrix Q = ffkm::test::random_orthonormal(rng, 7, 3);
            CHECK(best <= (G_H - G_H * Q * Q.transpose()).squaredNorm() + 1e-10);
        }
    }
}

TEST_CASE("component scores are uncorrelated") {
    Rng rng(5);
    const Matrix G_H = ffkm::test::center_columns(gaussian_matrix(rng, 50, 6) * gaussian_matrix(rng, 6, 6));
    const FpcaResult r = fpca_matrix(G_H, 6);
    const Matrix C = r.scores.transpose() * r.scores;
    const double scale = C.diagonal().maxCoeff();
    for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 6; ++j) {
            if (i != j) CHECK(std::abs(C(i, j)) < 1e-8 * scale);
        }
        CHECK(std::abs(C(i, i) - r.eigenvalues(i)) < 1e-8 * scale);
    }
    CHECK(rel_diff(r.B_H.transpose() * r.B_H, Matrix::Identity(6, 6)) < 1e-12);
}

TEST_CASE("fpca of a dataset works on the whitened coefficients") {
    Rng rng(6);
    const FunctionalDataset d = ffkm::test::random_dataset(rng, 30, 2);
    const FpcaResult a = fpca(d, 3);
    const FpcaResult b = fpca_matrix(whiten(d).G_H, 3);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.scores == b.scores);
}

TEST_CASE("fpca rejects invalid component counts") {
    Rng rng(7);
    const Matrix G_H = gaussian_matrix(rng, 10, 4);
    CHECK_THROWS_AS(fpca_matrix(G_H, 0), ConfigError);
    CHECK_THROWS_AS(fpca_matrix(G_H, 5), ConfigError);
}

TEST_CASE("cumulative rule stops at the first index reaching the cutoff") {
    const Vector ev = (Vector(4) << 4.0, 3.0, 2.0, 1.0).finished();
    CHECK(select_components(ev, ComponentRule::cumulative(0.9)) == 3);
    CHECK(select_components(ev, ComponentRule::cumulative(0.4)) == 1);
    CHECK(select_components(ev, ComponentRule::cumulative(0.71)) == 3);
    CHECK(select_components(ev, ComponentRule::cumulative(1.0)) == 4);
    const Vector with_zeros = (Vector(5) << 4.0, 3.0, 2.0, 0.0, 0.0).finished();
    CHECK(select_components(with_zeros, ComponentRule::cumulative(1.0)) == 3);
}

TEST_CASE("mean-eigenvalue rule counts eigenvalues above the mean") {
    const Vector ev = (Vector(5) << 10.0, 6.0, 2.0, 1.0, 1.0).finished();
    CHECK(select_components(ev, ComponentRule::mean_eigenvalue()) == 2);
    CHECK(select_components(ev, ComponentRule::fixed(4)) == 4);
}

TEST_CASE("flat spectrum under the mean rule clamps to one component with a warning") {
    WarningCapture w;
    const Vector ev = Vector::Ones(4);
    CHECK(select_components(ev, ComponentRule::mean_eigenvalue()) == 1);
    CHECK(w.messages().size() == 1);
}

TEST_CASE("component rules validate their parameters") {
    const Vector ev = Vector::Ones(3);
    CHECK_THROWS_AS(select_components(ev, ComponentRule::cumulative(0.0)), ConfigError);
    CHECK_THROWS_AS(select_components(ev, ComponentRule::cumulative(1.5)), ConfigError);
    CHECK_THROWS_AS(select_components(ev, ComponentRule::fixed(0)), ConfigError);
    CHECK_THROWS_AS(select_components(ev, ComponentRule::fixed(4)), ConfigError);
}
