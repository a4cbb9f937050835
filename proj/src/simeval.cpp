#include "ffkm/simeval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "ffkm/comparators.hpp"
#include "ffkm/error.hpp"
#include "ffkm/io.hpp"

namespace ffkm::sim {

std::string rank_name(Rank r) { return r == Rank::FR ? "FR" : "RD"; }

Rank parse_rank(const std::string& s) {
    if (s == "FR") return Rank::FR;
    if (s == "RD") return Rank::RD;
    throw ConfigError("unknown rank case '" + s + "' (valid: FR, RD)");
}

void SimDesign::validate() const {
    if (K != 4) throw ConfigError("the cluster generator places exactly K = 4 clusters, got " + std::to_string(K));
    if (L != 2) throw ConfigError("the planted subspace is two-dimensional, got L = " + std::to_string(L));
    if (N < K) throw ConfigError("N must be at least K");
    if (!(PO > 0.0 && PO < 0.5)) throw ConfigError("PO must lie in (0, 0.5)");
    if (NN < 0) throw ConfigError("NN must be nonnegative");
    if (order < 1 || n_knots < 2) throw ConfigError("invalid B-spline basis parameters");
    if (M != n_knots - 2 + order) {
        throw ConfigError("basis size M = " + std::to_string(M) + " does not match " + std::to_string(n_knots) +
                          " knots of order " + std::to_string(order));
    }
    const int M2 = M - M1();
    if (M2 < (rank_G2 == Rank::RD ? 3 : 1)) throw ConfigError("basis too small for the G2 block");
    if (T < M) throw ConfigError("need at least M sampling points");
}

std::string SimDesign::label() const {
    std::ostringstream s;
    s << "N" << N << "_PO" << io::format_double(PO) << "_" << rank_name(rank_G1) << "-" << rank_name(rank_G2)
      << "_NN" << NN;
    return s.str();
}

double separation_for_overlap(double PO) {
    if (!(PO > 0.0 && PO < 0.5)) {
        throw InputError("overlap " + io::format_double(PO) + " is outside (0, 0.5)");
    }
    const boost::math::normal_distribution<double> std_normal;
    return -2.0 * boost::math::quantile(std_normal, PO / 2.0);
}

ClusterScores generate_cluster_scores(Index N, int K, double PO, Rng& rng) {
    if (K != 4) throw InputError("the square-corner generator needs K = 4");
    if (N < K) throw InputError("need at least K objects");
    const double h = separation_for_overlap(PO) / 2.0;
    ClusterScores out;
    out.means.resize(K, 2);
    out.means << -h, -h, h, -h, -h, h, h, h;
    std::vector<int> labels(N);
    Index n = 0;
    for (int k = 0; k < K; ++k) {
        const Index size = N / K + (k < N % K ? 1 : 0);
        for (Index i = 0; i < size; ++i) labels[n++] = k;
    }
    out.F = gaussian_matrix(rng, N, 2);
    for (Index i = 0; i < N; ++i) out.F.row(i) += out.means.row(labels[i]);
    out.partition = Partition(std::move(labels), K);
    return out;
}

namespace {

Vector sample_sd(const Matrix& X) {
    const Matrix c = X.rowwise() - X.colwise().mean();
    return (c.colwise().squaredNorm() / static_cast<double>(X.rows() - 1)).cwiseSqrt().transpose();
}

// Span of the standardized cluster block: rows of (G1 - mean) D^-1 lie in span(D^-1 A1).
Matrix standardized_subspace(const Matrix& G1_raw, const Matrix& A1) {
    const Vector sd = sample_sd(G1_raw);
    return orthonormalize(sd.cwiseInverse().asDiagonal() * A1);
}

SimTruth finish_truth(ClusterScores scores, Matrix A1, Matrix G_H, Matrix A_true, Index P, int n_knots,
                      int order, int T, int K, Rng& rng) {
    auto basis = std::make_shared<const BasisSystem>(BasisSystem::bspline({1.0, static_cast<double>(T)}, n_knots, order));
    const PenalizedGram metric = penalized_gram(*basis, 0.0);
    std::vector<double> grid(T);
    for (int t = 0; t < T; ++t) grid[t] = t + 1.0;

    SimTruth truth;
    truth.curves = synthesize_curves(G_H, P, *basis, metric, grid);
    for (Index n = 0; n < G_H.rows(); ++n) truth.curves.object_ids.push_back("obj" + std::to_string(n + 1));
    truth.dataset = std::make_shared<const FunctionalDataset>(center(fit_coefficients(truth.curves, basis, 0.0)));
    truth.reference = kmeans(scores.F, K, 100, rng()).partition;
    truth.F = std::move(scores.F);
    truth.planted = std::move(scores.partition);
    truth.A1 = std::move(A1);
    truth.G_H = std::move(G_H);
    truth.A_true = std::move(A_true);
    return truth;
}

}  // namespace

SimTruth generate_dataset(const SimDesign& design, Rng& rng) {
    design.validate();
    const Index N = design.N;
    const int M = design.M;
    const int M1 = design.M1();
    const int M2 = M - M1;
    const Index P = 1 + design.NN;

    ClusterScores scores = generate_cluster_scores(N, design.K, design.PO, rng);
    Matrix A1 = orthonormalize(gaussian_matrix(rng, M1, design.L));
    const Matrix G1 = scores.F * A1.transpose();
    Matrix G2;
    if (design.rank_G2 == Rank::FR) {
        G2 = gaussian_matrix(rng, N, M2);
    } else {
        const Matrix E = gaussian_matrix(rng, N, M2 - 2);
        const Matrix A2 = orthonormalize(gaussian_matrix(rng, M2, M2 - 2));
        G2 = E * A2.transpose();
    }

    Matrix G_H(N, P * M);
    Matrix informative(N, M);
    informative << G1, G2;
    G_H.leftCols(M) = standardize_columns(informative);
    for (Index p = 1; p < P; ++p) {
        G_H.middleCols(p * M, M) = standardize_columns(gaussian_matrix(rng, N, M));
    }

    Matrix A_true = Matrix::Zero(P * M, design.L);
    A_true.topRows(M1) = standardized_subspace(G1, A1);
    return finish_truth(std::move(scores), std::move(A1), std::move(G_H), std::move(A_true), P, design.n_knots,
                        design.order, design.T, design.K, rng);
}

SimTruth generate_example1(const Example1Design& design, Rng& rng) {
    if (design.noise_columns < 2) throw ConfigError("Example-1 data needs at least two noise columns");
    if (!(design.noise_sd > 0.0)) throw ConfigError("noise_sd must be positive");
    const Index N = design.N;
    const int M = 2 + design.noise_columns;
    const int order = 4;
    const int n_knots = M + 2 - order;

    ClusterScores scores = generate_cluster_scores(N, design.K, design.PO, rng);
    Matrix A1 = orthonormalize(gaussian_matrix(rng, 2, 2));
    const Matrix G1 = scores.F * A1.transpose();
    Matrix G2 = design.noise_sd * gaussian_matrix(rng, N, design.noise_columns);
    G2 = G2.rowwise() - G2.colwise().mean();

    Matrix G_H(N, M);
    G_H << standardize_columns(G1), G2;
    Matrix A_true = Matrix::Zero(M, 2);
    A_true.topRows(2) = standardized_subspace(G1, A1);
    return finish_truth(std::move(scores), std::move(A1), std::move(G_H), std::move(A_true), 1, n_knots, order,
                        design.T, design.K, rng);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw InputError("partitions have different lengths (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    std::map<int, int> ca, cb;
    for (int x : a) ca.emplace(x, static_cast<int>(ca.size()));
    for (int x : b) cb.emplace(x, static_cast<int>(cb.size()));
    std::vector<double> table(ca.size() * cb.size(), 0.0), ra(ca.size(), 0.0), rb(cb.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int ia = ca[a[i]], ib = cb[b[i]];
        table[ia * cb.size() + ib] += 1.0;
        ra[ia] += 1.0;
        rb[ib] += 1.0;
    }
    auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (double n : table) index += pairs(n);
    for (double n : ra) sa += pairs(n);
    for (double n : rb) sb += pairs(n);
    const double total = pairs(static_cast<double>(a.size()));
    const double expected = total > 0.0 ? sa * sb / total : 0.0;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double adjusted_rand_index(const Partition& a, const Partition& b) {
    return adjusted_rand_index(std::span<const int>(a.labels), std::span<const int>(b.labels));
}

double weight_rmse(const Matrix& A_true, const Matrix& A_est, const Matrix* metric) {
    if (A_true.cols() != A_est.cols()) {
        throw InputError("weight sets have different numbers of components (" + std::to_string(A_true.cols()) +
                         " vs " + std::to_string(A_est.cols()) + ")");
    }
    if (A_true.rows() != A_est.rows()) throw InputError("weight sets have different coefficient lengths");
    const Matrix W = metric ? *metric : Matrix::Identity(A_true.rows(), A_true.rows());
    if (W.rows() != A_true.rows() || W.cols() != A_true.rows()) throw InputError("metric does not conform");
    const Matrix R = polar_orthonormal(A_est.transpose() * W * A_true);
    const Matrix diff = A_true - A_est * R;
    const double ss = (diff.transpose() * W * diff).trace();
    return std::sqrt(std::max(ss, 0.0) / static_cast<double>(A_true.cols()));
}

std::string method_name(Method m) {
    switch (m) {
        case Method::ffkm: return "ffkm";
        case Method::ffkm2: return "ffkm2";
        case Method::fpck: return "fpck";
        case Method::tandem: return "tandem";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    for (Method m : all_methods()) {
        if (method_name(m) == s) return m;
    }
    throw ConfigError("unknown method '" + s + "' (valid: ffkm, ffkm2, fpck, tandem)");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> m{Method::ffkm, Method::ffkm2, Method::fpck, Method::tandem};
    return m;
}

namespace {

const std::vector<std::pair<Rank, Rank>> kRankPairs{
    {Rank::FR, Rank::FR}, {Rank::RD, Rank::FR}, {Rank::FR, Rank::RD}, {Rank::RD, Rank::RD}};

}  // namespace

std::vector<SimDesign> enumerate_cells() {
    std::vector<SimDesign> cells;
    for (int N : {100, 300, 500}) {
        for (double PO : {0.0001, 0.05, 0.10, 0.15}) {
            for (auto [r1, r2] : kRankPairs) {
                for (int NN : {0, 1, 2}) {
                    SimDesign d;
                    d.N = N;
                    d.PO = PO;
                    d.rank_G1 = r1;
                    d.rank_G2 = r2;
                    d.NN = NN;
                    cells.push_back(d);
                }
            }
        }
    }
    return cells;
}

std::vector<SimDesign> desk_cells() {
    std::vector<SimDesign> cells;
    for (double PO : {0.0001, 0.15}) {
        for (auto [r1, r2] : {kRankPairs[0], kRankPairs[1], kRankPairs[2]}) {
            for (int NN : {0, 2}) {
                SimDesign d;
                d.PO = PO;
                d.rank_G1 = r1;
                d.rank_G2 = r2;
                d.NN = NN;
                cells.push_back(d);
            }
        }
    }
    return cells;
}

std::uint64_t cell_seed(std::uint64_t seed, const SimDesign& d) {
    const auto po = static_cast<std::uint64_t>(std::llround(d.PO * 1e6));
    const std::uint64_t ranks = (d.rank_G1 == Rank::RD ? 2u : 0u) + (d.rank_G2 == Rank::RD ? 1u : 0u);
    const std::uint64_t code = ((static_cast<std::uint64_t>(d.N) * 1000000u + po) * 4u + ranks) * 16u +
                               static_cast<std::uint64_t>(d.NN);
    return derive_seed(seed, code, static_cast<std::uint64_t>(d.M));
}

std::vector<ResultRow> run_replicate(const SimDesign& design, int replicate, const ExperimentConfig& config) {
    const std::uint64_t rep_seed = derive_seed(cell_seed(config.seed, design), static_cast<std::uint64_t>(replicate));
    Rng data_rng(derive_seed(rep_seed, 0));
    const SimTruth truth = generate_dataset(design, data_rng);

    std::vector<ResultRow> rows;
    for (Method m : config.methods) {
        ResultRow row;
        row.design = design;
        row.replicate = replicate;
        row.method = m;
        FfkmConfig c;
        c.K = design.K;
        c.L = design.L;
        c.n_starts = (m == Method::ffkm || m == Method::ffkm2) ? config.starts_ffkm : config.starts_other;
        c.max_iter = config.max_iter;
        c.seed = derive_seed(rep_seed, 1 + static_cast<std::uint64_t>(m));
        c.threads = config.threads;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            FitResult fit;
            switch (m) {
                case Method::ffkm: fit = ffkm_fit(*truth.dataset, c); break;
                case Method::ffkm2:
                    fit = two_step_ffkm(*truth.dataset, c, ComponentRule::cumulative(config.two_step_cutoff));
                    break;
                case Method::fpck: fit = fpck_fit(*truth.dataset, c); break;
                case Method::tandem: fit = tandem_fit(*truth.dataset, c); break;
            }
            row.ari = adjusted_rand_index(truth.reference, fit.partition);
            row.rmse = weight_rmse(truth.A_true, fit.weights.A_H);
            row.loss = fit.loss;
            row.converged = fit.converged;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        if (config.timing) {
            row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const std::vector<SimDesign>& cells, const ExperimentConfig& config,
                                      const Progress& progress) {
    if (config.replicates < 1) throw ConfigError("replicates must be positive");
    if (config.methods.empty()) throw ConfigError("no methods selected");
    for (const auto& c : cells) c.validate();
    std::vector<ResultRow> rows;
    const std::size_t total = cells.size() * static_cast<std::size_t>(config.replicates);
    std::size_t done = 0;
    for (const auto& cell : cells) {
        for (int r = 0; r < config.replicates; ++r) {
            auto rep = run_replicate(cell, r, config);
            rows.insert(rows.end(), std::make_move_iterator(rep.begin()), std::make_move_iterator(rep.end()));
            if (progress) progress(++done, total);
        }
    }
    return rows;
}

namespace {

const io::Row kResultHeader{"N",   "PO",   "rank_G1",    "rank_G2",   "NN",   "replicate", "method",
                            "ARI", "RMSE", "loss",       "runtime_ms", "converged", "error"};

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    io::write_csv_row(out, kResultHeader);
    for (const auto& r : rows) {
        io::write_csv_row(out, {std::to_string(r.design.N), io::format_double(r.design.PO),
                                rank_name(r.design.rank_G1), rank_name(r.design.rank_G2),
                                std::to_string(r.design.NN), std::to_string(r.replicate), method_name(r.method),
                                io::format_double(r.ari), io::format_double(r.rmse), io::format_double(r.loss),
                                r.runtime_ms ? io::format_double(*r.runtime_ms) : "NA",
                                r.converged ? "true" : "false", r.error});
    }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    const auto table = io::read_csv(in);
    if (table.empty() || table[0] != kResultHeader) throw InputError("not an experiment results table");
    auto number = [](const std::string& s, const char* what) {
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        return io::parse_double(s, what);
    };
    std::vector<ResultRow> rows;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& f = table[i];
        if (f.size() != kResultHeader.size()) throw InputError("results row " + std::to_string(i + 1) + " is ragged");
        ResultRow r;
        r.design.N = static_cast<int>(io::parse_integer(f[0], "N"));
        r.design.PO = number(f[1], "PO");
        r.design.rank_G1 = parse_rank(f[2]);
        r.design.rank_G2 = parse_rank(f[3]);
        r.design.NN = static_cast<int>(io::parse_integer(f[4], "NN"));
        r.replicate = static_cast<int>(io::parse_integer(f[5], "replicate"));
        r.method = parse_method(f[6]);
        r.ari = number(f[7], "ARI");
        r.rmse = number(f[8], "RMSE");
        r.loss = number(f[9], "loss");
        if (f[10] != "NA") r.runtime_ms = number(f[10], "runtime_ms");
        r.converged = f[11] == "true";
        r.error = f[12];
        rows.push_back(std::move(r));
    }
    return rows;
}

double medcouple(std::vector<double> x) {
    x.erase(std::remove_if(x.begin(), x.end(), [](double v) { return std::isnan(v); }), x.end());
    if (x.size() < 2) return 0.0;
    std::sort(x.begin(), x.end(), std::greater<>());
    const std::size_t n = x.size();
    const double med = n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
    std::vector<double> upper, lower;  // upper descending, lower descending
    for (double v : x) {
        if (v >= med) upper.push_back(v);
        if (v <= med) lower.push_back(v);
    }
    const auto ties = static_cast<long>(std::count(x.begin(), x.end(), med));
    const long first_tie_upper = static_cast<long>(upper.size()) - ties;
    std::vector<double> h;
    h.reserve(upper.size() * lower.size());
    for (std::size_t i = 0; i < upper.size(); ++i) {
        for (std::size_t j = 0; j < lower.size(); ++j) {
            const double xi = upper[i], xj = lower[j];
            if (xi == med && xj == med) {
                // Pairs tied at the median: -1, 0 or +1 as a + b + 1 is below, at or above the tie count.
                const long a = static_cast<long>(i) - first_tie_upper;
                const long b = static_cast<long>(j);
                const long s = a + b + 1 - ties;
                h.push_back(s < 0 ? -1.0 : (s > 0 ? 1.0 : 0.0));
            } else {
                h.push_back(((xi - med) - (med - xj)) / (xi - xj));
            }
        }
    }
    const std::size_t m = h.size();
    std::sort(h.begin(), h.end());
    return m % 2 ? h[m / 2] : 0.5 * (h[m / 2 - 1] + h[m / 2]);
}

BoxStats box_stats(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
    BoxStats s;
    s.n = values.size();
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.median = s.q1 = s.q3 = s.medcouple = s.lower_fence = s.upper_fence = nan;
        return s;
    }
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    s.median = quantile(0.5);
    s.q1 = quantile(0.25);
    s.q3 = quantile(0.75);
    s.medcouple = medcouple(values);
    const double iqr = s.q3 - s.q1;
    const double mc = s.medcouple;
    if (mc >= 0) {
        s.lower_fence = s.q1 - 1.5 * std::exp(-4.0 * mc) * iqr;
        s.upper_fence = s.q3 + 1.5 * std::exp(3.0 * mc) * iqr;
    } else {
        s.lower_fence = s.q1 - 1.5 * std::exp(-3.0 * mc) * iqr;
        s.upper_fence = s.q3 + 1.5 * std::exp(4.0 * mc) * iqr;
    }
    return s;
}

namespace {

nlohmann::json box_json(const BoxStats& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"n", s.n},
            {"median", num(s.median)},
            {"q1", num(s.q1)},
            {"q3", num(s.q3)},
            {"medcouple", num(s.medcouple)},
            {"lower_fence", num(s.lower_fence)},
            {"upper_fence", num(s.upper_fence)}};
}

}  // namespace

nlohmann::json summarize(const std::vector<ResultRow>& rows) {
    struct Acc {
        std::vector<double> ari, rmse;
        std::size_t failed = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, SimDesign> designs;
    std::map<std::string, std::vector<Method>> method_order;
    std::map<std::pair<std::string, Method>, Acc> acc;
    for (const auto& r : rows) {
        const std::string key = r.design.label();
        if (designs.emplace(key, r.design).second) order.push_back(key);
        auto& mo = method_order[key];
        if (std::find(mo.begin(), mo.end(), r.method) == mo.end()) mo.push_back(r.method);
        Acc& a = acc[{key, r.method}];
        if (!r.error.empty()) {
            ++a.failed;
            continue;
        }
        a.ari.push_back(r.ari);
        a.rmse.push_back(r.rmse);
    }
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& key : order) {
        const SimDesign& d = designs[key];
        nlohmann::json methods = nlohmann::json::object();
        for (Method m : method_order[key]) {
            const Acc& a = acc[{key, m}];
            methods[method_name(m)] = {
                {"ARI", box_json(box_stats(a.ari))}, {"RMSE", box_json(box_stats(a.rmse))}, {"failed", a.failed}};
        }
        cells.push_back({{"cell", key},
                         {"N", d.N},
                         {"PO", d.PO},
                         {"rank_G1", rank_name(d.rank_G1)},
                         {"rank_G2", rank_name(d.rank_G2)},
                         {"NN", d.NN},
                         {"methods", methods}});
    }
    return {{"cells", cells}};
}

}  // namespace ffkm::sim
