#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ffkm/error.hpp"
#include "ffkm/kmeans.hpp"
#include "ffkm/simeval.hpp"
#include "support.hpp"

using namespace ffkm;
using namespace ffkm::sim;

namespace {

// ARI straight from pair counts over all object pairs.
double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
            pairs += 1;
        }
    }
    const double expected = in_a * in_b / pairs;
    const double max_index = 0.5 * (in_a + in_b);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

// Medcouple for samples without repeated values, straight from the kernel definition.
double naive_medcouple(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    const double med = n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
    std::vector<double> h;
    for (double xi : x) {
        for (double xj : x) {
            if (xi < med || xj > med) continue;
            h.push_back(xi == xj ? 0.0 : ((xi - med) - (med - xj)) / (xi - xj));
        }
    }
    std::sort(h.begin(), h.end());
    const std::size_t m = h.size();
    return m % 2 ? h[m / 2] : 0.5 * (h[m / 2 - 1] + h[m / 2]);
}

Index matrix_rank(const Matrix& X) {
    Eigen::JacobiSVD<Matrix> svd(X);
    svd.setThreshold(1e-10);
    return svd.rank();
}

}  // namespace

TEST_CASE("well separated cluster scores are recovered by k-means") {
    Rng rng(1);
    const ClusterScores s = generate_cluster_scores(400, 4, 0.0001, rng);
    const KmeansResult km = kmeans(s.F, 4, 20, 3);
    CHECK(adjusted_rand_index(s.partition, km.partition) >= 0.99);
    const std::vector<Index> sizes(s.partition.sizes.begin(), s.partition.sizes.end());
    CHECK(sizes == std::vector<Index>{100, 100, 100, 100});
}

TEST_CASE("adjacent clusters overlap at the requested rate") {
    Rng rng(2);
    const double PO = 0.15;
    const ClusterScores s = generate_cluster_scores(100000, 4, PO, rng);
    // A draw from the (-d/2, -d/2) cluster crosses the boundary to its right
    // neighbour with probability Phi(-d/2) = PO / 2.
    double crossed = 0, count = 0;
    for (Index n = 0; n < s.F.rows(); ++n) {
        if (s.partition.labels[n] != 0) continue;
        count += 1;
        crossed += s.F(n, 0) > 0.0;
    }
    CHECK(std::abs(crossed / count - PO / 2.0) < 0.02);
}

TEST_CASE("separation shrinks as overlap grows") {
    double previous = separation_for_overlap(1e-6);
    for (double PO : {1e-4, 0.01, 0.05, 0.1, 0.15, 0.3, 0.49}) {
        const double d = separation_for_overlap(PO);
        CHECK(d < previous);
        CHECK(d > 0.0);
        previous = d;
    }
    CHECK_THROWS_AS(separation_for_overlap(0.0), InputError);
    CHECK_THROWS_AS(separation_for_overlap(0.5), InputError);
}

TEST_CASE("simulated curves refit to the generating coefficients") {
    SimDesign design;
    design.N = 300;
    Rng rng(3);
    const SimTruth truth = generate_dataset(design, rng);
    CHECK(truth.curves.n_objects() == 300);
    CHECK(truth.curves.variables.front().grid.size() == 100);
    CHECK(truth.curves.variables.front().grid.front() == 1.0);
    CHECK(truth.curves.variables.front().grid.back() == 100.0);
    const Matrix G_H = whiten(*truth.dataset).G_H;
    CHECK(ffkm::test::rel_diff(G_H, truth.G_H) < 1e-6);
}

TEST_CASE("rank-deficient and noise-variable designs have the planned shapes") {
    SimDesign design;
    design.rank_G1 = Rank::RD;
    design.rank_G2 = Rank::RD;
    design.NN = 2;
    Rng rng(4);
    const SimTruth truth = generate_dataset(design, rng);
    CHECK(truth.G_H.cols() == 3 * 10);
    CHECK(truth.dataset->n_variables() == 3);
    CHECK(truth.dataset->dimension() == 30);
    CHECK(matrix_rank(truth.G_H.leftCols(5)) == 2);
    CHECK(matrix_rank(truth.G_H.middleCols(5, 5)) == 3);
    CHECK(ffkm::test::rel_diff(truth.A_true.transpose() * truth.A_true, Matrix::Identity(2, 2)) < 1e-12);
    CHECK(truth.A_true.bottomRows(25).norm() == 0.0);

    SimDesign full;
    Rng rng2(5);
    const SimTruth t2 = generate_dataset(full, rng2);
    CHECK(matrix_rank(t2.G_H.rightCols(8)) == 8);
    CHECK(t2.A1.rows() == 2);
}

TEST_CASE("the cluster block of the true weights spans the clustered coefficients") {
    Rng rng(6);
    const SimTruth truth = generate_dataset(SimDesign{}, rng);
    const Matrix block = truth.G_H.leftCols(2);
    const Matrix P = truth.A_true.topRows(2) * truth.A_true.topRows(2).transpose();
    CHECK(ffkm::test::rel_diff(block * P, block) < 1e-10);
}

TEST_CASE("generators are deterministic in the seed") {
    Rng a(7), b(7);
    const SimTruth x = generate_dataset(SimDesign{}, a);
    const SimTruth y = generate_dataset(SimDesign{}, b);
    CHECK(x.G_H == y.G_H);
    CHECK(x.reference == y.reference);
    CHECK(x.dataset->coefficients() == y.dataset->coefficients());
    Rng c(8);
    CHECK(generate_dataset(SimDesign{}, c).G_H != x.G_H);
}

TEST_CASE("masking-noise data carries clusters in the first two coefficients") {
    Rng rng(9);
    const SimTruth truth = generate_example1(Example1Design{}, rng);
    CHECK(truth.G_H.cols() == 6);
    CHECK(truth.dataset->dimension() == 6);
    const KmeansResult km = kmeans(truth.G_H.leftCols(2), 4, 20, 1);
    CHECK(adjusted_rand_index(truth.reference, km.partition) >= 0.99);
    const Vector sd = (truth.G_H.colwise().squaredNorm() / 99.0).cwiseSqrt().transpose();
    CHECK(sd(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sd(2) > 1.5);
}

TEST_CASE("design validation rejects unsupported shapes") {
    SimDesign d;
    d.K = 3;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = SimDesign{};
    d.M = 11;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = SimDesign{};
    d.PO = 0.6;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    CHECK(SimDesign{}.label() == "N100_PO1e-04_FR-FR_NN0");
}

TEST_CASE("adjusted Rand index on known partitions") {
    const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1}, c{5, 5, 9, 9};
    CHECK(adjusted_rand_index(a, a) == 1.0);
    CHECK(adjusted_rand_index(a, c) == 1.0);
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5).epsilon(1e-14));
    const std::vector<int> singletons{0, 1, 2, 3}, one{0, 0, 0, 0};
    CHECK(adjusted_rand_index(singletons, singletons) == 1.0);
    CHECK(adjusted_rand_index(one, one) == 1.0);
    CHECK_THROWS_AS(adjusted_rand_index(a, std::vector<int>{0, 1}), InputError);
}

TEST_CASE("adjusted Rand index matches pair counting and never exceeds one") {
    Rng rng(10);
    std::uniform_int_distribution<int> k_pick(1, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 30;
        std::uniform_int_distribution<int> la(0, k_pick(rng) - 1), lb(0, k_pick(rng) - 1);
        std::vector<int> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = la(rng);
            b[i] = lb(rng);
        }
        const double ari = adjusted_rand_index(a, b);
        CHECK(ari == doctest::Approx(pair_count_ari(a, b)).epsilon(1e-12));
        CHECK(ari <= 1.0 + 1e-12);
        CHECK(ari == doctest::Approx(adjusted_rand_index(b, a)).epsilon(1e-12));
    }
    std::vector<int> all_single(12);
    for (int i = 0; i < 12; ++i) all_single[i] = i;
    const std::vector<int> halves{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    CHECK(adjusted_rand_index(all_single, halves) == doctest::Approx(pair_count_ari(all_single, halves)));
}

TEST_CASE("weight RMSE is rotation invariant") {
    Rng rng(11);
    const Matrix A = ffkm::test::random_orthonormal(rng, 10, 2);
    CHECK(weight_rmse(A, A) < 1e-12);
    Matrix R(2, 2);
    R << 0, -1, 1, 0;
    CHECK(weight_rmse(A, A * R) < 1e-12);
    CHECK(weight_rmse(A, -A) < 1e-12);
    Matrix Q = ffkm::test::random_orthonormal(rng, 10, 4);
    CHECK(weight_rmse(Q.leftCols(2), Q.rightCols(2)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    const Matrix W = 4.0 * Matrix::Identity(10, 10);
    CHECK(weight_rmse(Q.leftCols(2), Q.rightCols(2), &W) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(weight_rmse(A, Q), InputError);
}

TEST_CASE("cell grids") {
    const auto all = enumerate_cells();
    CHECK(all.size() == 144);
    std::set<std::string> labels;
    std::set<std::uint64_t> seeds;
    for (const auto& c : all) {
        labels.insert(c.label());
        seeds.insert(cell_seed(0, c));
    }
    CHECK(labels.size() == 144);
    CHECK(seeds.size() == 144);
    const auto desk = desk_cells();
    CHECK(desk.size() == 12);
    for (const auto& c : desk) {
        CHECK(labels.count(c.label()) == 1);
        CHECK_FALSE((c.rank_G1 == Rank::RD && c.rank_G2 == Rank::RD));
    }
    CHECK(desk.front().label() == "N100_PO1e-04_FR-FR_NN0");
}

TEST_CASE("method names") {
    for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    try {
        parse_method("kmeans");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        for (const char* name : {"ffkm", "ffkm2", "fpck", "tandem"}) CHECK(msg.find(name) != std::string::npos);
    }
}

TEST_CASE("results table round trip") {
    std::vector<ResultRow> rows(3);
    rows[0].ari = 0.123456789012345;
    rows[0].rmse = 1.0 / 3.0;
    rows[0].loss = 1e-300;
    rows[0].runtime_ms = 12.5;
    rows[0].converged = true;
    rows[1].design.rank_G1 = Rank::RD;
    rows[1].design.PO = 0.15;
    rows[1].design.NN = 2;
    rows[1].method = Method::tandem;
    rows[1].replicate = 19;
    rows[1].error = "failed, \"badly\"\nsecond line";
    rows[2].method = Method::ffkm2;
    rows[2].ari = -0.25;
    std::stringstream s;
    write_results_csv(s, rows);
    const auto back = read_results_csv(s);
    REQUIRE(back.size() == 3);
    CHECK(back[0].ari == rows[0].ari);
    CHECK(back[0].rmse == rows[0].rmse);
    CHECK(back[0].loss == rows[0].loss);
    CHECK(back[0].runtime_ms == rows[0].runtime_ms);
    CHECK(back[0].converged);
    CHECK(back[1].design.label() == rows[1].design.label());
    CHECK(back[1].method == Method::tandem);
    CHECK(back[1].replicate == 19);
    CHECK(back[1].error == rows[1].error);
    CHECK(std::isnan(back[1].ari));
    CHECK_FALSE(back[1].runtime_ms.has_value());
    CHECK(back[2].ari == -0.25);

    std::stringstream bad("a,b\n1,2\n");
    CHECK_THROWS_AS(read_results_csv(bad), InputError);
}

TEST_CASE("medcouple") {
    CHECK(medcouple({1, 2, 3, 4, 5, 6, 7}) == 0.0);
    CHECK(medcouple({-3, -1, 0, 1, 3}) == 0.0);
    CHECK(medcouple({1, 2, 3, 10, 20, 30, 100}) > 0.0);
    CHECK(medcouple({-100, -30, -20, -10, -3, -2, -1}) < 0.0);
    Rng rng(12);
    std::exponential_distribution<double> e(1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(5 + trial);
        for (double& v : x) v = e(rng);
        CHECK(medcouple(x) == doctest::Approx(naive_medcouple(x)).epsilon(1e-12));
    }
    CHECK(medcouple({2.0}) == 0.0);
}

TEST_CASE("box statistics") {
    const BoxStats s = box_stats({5, 1, 3, 2, 4, std::nan("")});
    CHECK(s.n == 5);
    CHECK(s.median == 3.0);
    CHECK(s.q1 == 2.0);
    CHECK(s.q3 == 4.0);
    CHECK(s.medcouple == 0.0);
    CHECK(s.lower_fence == -1.0);
    CHECK(s.upper_fence == 7.0);
    const BoxStats skew = box_stats({1, 2, 3, 10, 20, 30, 100});
    CHECK(skew.upper_fence - skew.q3 > skew.q1 - skew.lower_fence);
    const BoxStats empty = box_stats({});
    CHECK(empty.n == 0);
    CHECK(std::isnan(empty.median));
}

TEST_CASE("summaries group rows by cell and method") {
    std::vector<ResultRow> rows;
    for (int r = 0; r < 4; ++r) {
        for (Method m : {Method::ffkm, Method::fpck}) {
            ResultRow row;
            row.replicate = r;
            row.method = m;
            row.ari = m == Method::ffkm ? 1.0 : 0.1 * r;
            row.rmse = 0.0;
            if (m == Method::fpck && r == 3) row.error = "boom";
            rows.push_back(row);
        }
    }
    const nlohmann::json j = summarize(rows);
    REQUIRE(j["cells"].size() == 1);
    const auto& cell = j["cells"][0];
    CHECK(cell["cell"] == "N100_PO1e-04_FR-FR_NN0");
    CHECK(cell["methods"]["ffkm"]["ARI"]["median"] == 1.0);
    CHECK(cell["methods"]["fpck"]["ARI"]["n"] == 3);
    CHECK(cell["methods"]["fpck"]["failed"] == 1);
    CHECK(cell["methods"]["fpck"]["ARI"]["median"].get<double>() == doctest::Approx(0.1));
}

TEST_CASE("replicates reproduce and scale with the method list") {
    ExperimentConfig config;
    config.methods = {Method::ffkm, Method::tandem};
    config.starts_ffkm = 20;
    config.starts_other = 10;
    config.timing = false;
    config.seed = 42;
    const auto a = run_replicate(SimDesign{}, 3, config);
    const auto b = run_replicate(SimDesign{}, 3, config);
    REQUIRE(a.size() == 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].error.empty());
        CHECK(a[i].ari == b[i].ari);
        CHECK(a[i].rmse == b[i].rmse);
        CHECK(a[i].loss == b[i].loss);
        CHECK_FALSE(a[i].runtime_ms.has_value());
    }

    config.replicates = 2;
    std::size_t calls = 0;
    const auto rows = run_experiment({SimDesign{}}, config, [&](std::size_t, std::size_t total) {
        ++calls;
        CHECK(total == 2);
    });
    CHECK(rows.size() == 4);
    CHECK(calls == 2);
    config.replicates = 0;
    CHECK_THROWS_AS(run_experiment({SimDesign{}}, config), ConfigError);
}

TEST_CASE("FFKM recovers the planted clusters in the easy cell") {
    ExperimentConfig config;
    config.methods = {Method::ffkm};
    config.replicates = 20;
    config.timing = false;
    std::vector<double> aris;
    for (const auto& r : run_experiment({SimDesign{}}, config)) aris.push_back(r.ari);
    CHECK(box_stats(aris).median >= 0.9);
}
