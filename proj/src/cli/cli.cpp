#include "ffkm/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ffkm/comparators.hpp"
#include "ffkm/diagnostics.hpp"
#include "ffkm/error.hpp"
#include "ffkm/ffkm.hpp"
#include "ffkm/io.hpp"
#include "ffkm/simeval.hpp"

namespace ffkm::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct InputOptions {
    std::vector<std::string> dense;
    std::string long_path;
    std::string sidecar;
    std::string labels;
    int basis_order = 4;
    int knots = 10;
};

struct LambdaOptions {
    std::optional<double> lambda;
    bool gcv = false;
    std::string lambdas;
    double gcv_min = 0.1;
    double gcv_max = 500.0;
    int gcv_points = 25;
};

struct FitOptions {
    std::string method = "ffkm";
    int K = 2;
    int L = 1;
    std::optional<int> starts;
    std::uint64_t seed = 0;
    int threads = 1;
    int max_iter = 100;
    double rel_tol = 1e-8;
    std::optional<int> R;
    std::string r_rule;
    bool standardize = false;
    std::string out;
};

struct SimulateOptions {
    int N = 100;
    double PO = 0.0001;
    std::string rank_g1 = "FR";
    std::string rank_g2 = "FR";
    int NN = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    bool example1 = false;
    double noise_sd = 2.0;
    std::string out;
};

struct ExperimentOptions {
    std::string cells = "desk";
    bool all_cells = false;
    int replicates = 20;
    std::vector<std::string> methods;
    std::uint64_t seed = 0;
    int starts = 1000;
    int other_starts = 100;
    int threads = 1;
    bool no_timing = false;
    bool dry_run = false;
    std::string out;
};

void add_input_options(CLI::App* cmd, InputOptions& o) {
    cmd->add_option("--dense", o.dense, "Dense CSV per variable, as NAME=PATH or PATH (repeatable)");
    cmd->add_option("--long", o.long_path, "Long CSV with columns object_id, variable, t, value");
    cmd->add_option("--sidecar", o.sidecar, "JSON sidecar with domain and variable_names");
    cmd->add_option("--basis-order", o.basis_order, "B-spline order (4 = cubic)")->capture_default_str();
    cmd->add_option("--knots", o.knots, "Number of equally spaced knots, boundaries included")->capture_default_str();
}

void add_lambda_options(CLI::App* cmd, LambdaOptions& o, bool fit) {
    if (fit) {
        auto* lam = cmd->add_option("--lambda", o.lambda, "Roughness penalty (default 0)");
        auto* gcv = cmd->add_flag("--gcv", o.gcv, "Select the roughness penalty by generalized cross-validation");
        lam->excludes(gcv);
    }
    cmd->add_option("--lambdas", o.lambdas, "Comma-separated GCV grid (overrides the logarithmic grid)");
    cmd->add_option("--gcv-min", o.gcv_min, "Smallest value of the logarithmic GCV grid")->capture_default_str();
    cmd->add_option("--gcv-max", o.gcv_max, "Largest value of the logarithmic GCV grid")->capture_default_str();
    cmd->add_option("--gcv-points", o.gcv_points, "Number of points of the logarithmic GCV grid")
        ->capture_default_str();
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(io::parse_double(item, what));
    }
    return out;
}

std::vector<double> lambda_grid(const LambdaOptions& o) {
    if (!o.lambdas.empty()) {
        auto grid = parse_number_list(o.lambdas, "lambda");
        if (grid.empty()) throw ConfigError("GCV lambda grid is empty");
        return grid;
    }
    if (o.gcv_points < 1) throw ConfigError("GCV lambda grid is empty (--gcv-points must be positive)");
    if (!(o.gcv_min > 0.0) || !(o.gcv_max >= o.gcv_min)) {
        throw ConfigError("logarithmic GCV grid needs 0 < gcv-min <= gcv-max");
    }
    std::vector<double> grid(o.gcv_points);
    if (o.gcv_points == 1) {
        grid[0] = o.gcv_min;
        return grid;
    }
    const double a = std::log(o.gcv_min), b = std::log(o.gcv_max);
    for (int i = 0; i < o.gcv_points; ++i) {
        grid[i] = std::exp(a + (b - a) * i / (o.gcv_points - 1));
    }
    grid.front() = o.gcv_min;
    grid.back() = o.gcv_max;
    return grid;
}

struct LoadedInput {
    CurveSamples samples;
    std::shared_ptr<const BasisSystem> basis;
    Domain domain;
};

LoadedInput load_input(const InputOptions& o) {
    if (o.dense.empty() == o.long_path.empty()) {
        throw ConfigError("give either --dense (one or more) or --long input");
    }
    LoadedInput in;
    if (!o.long_path.empty()) {
        in.samples = io::read_long(o.long_path);
    } else {
        std::vector<io::DenseInput> files;
        for (const auto& spec : o.dense) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos) {
                files.push_back({fs::path(spec).stem().string(), spec});
            } else {
                files.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
            }
        }
        in.samples = io::read_dense(files);
    }
    in.domain = io::grid_domain(in.samples);
    if (!o.sidecar.empty()) {
        const io::Sidecar side = io::read_sidecar(o.sidecar);
        if (side.has_domain) {
            for (const auto& v : in.samples.variables) {
                if (v.grid.front() < side.domain.lo || v.grid.back() > side.domain.hi) {
                    throw InputError("sampling grid of '" + v.name + "' leaves the sidecar domain");
                }
            }
            in.domain = side.domain;
        }
        if (!side.variable_names.empty()) {
            if (side.variable_names.size() != in.samples.variables.size()) {
                throw InputError("sidecar names " + std::to_string(side.variable_names.size()) +
                                 " variables, the data has " + std::to_string(in.samples.variables.size()));
            }
            for (std::size_t p = 0; p < side.variable_names.size(); ++p) {
                in.samples.variables[p].name = side.variable_names[p];
            }
        }
    }
    in.basis = std::make_shared<const BasisSystem>(BasisSystem::bspline(in.domain, o.knots, o.basis_order));
    return in;
}

std::vector<std::string> object_ids(const CurveSamples& s) {
    if (!s.object_ids.empty()) return s.object_ids;
    std::vector<std::string> ids;
    for (Index n = 0; n < s.n_objects(); ++n) ids.push_back(std::to_string(n + 1));
    return ids;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path.string() + "'");
    f << text;
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void write_csv(const fs::path& path, const std::vector<io::Row>& rows) {
    std::ostringstream s;
    for (const auto& r : rows) io::write_csv_row(s, r);
    write_text(path, s.str());
}

fs::path prepare_out(const std::string& out) {
    if (out.empty()) throw ConfigError("--out directory is required");
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory '" + out + "'");
    return dir;
}

ordered_json json_number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json matrix_rows(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        ordered_json r = ordered_json::array();
        for (Index j = 0; j < m.cols(); ++j) r.push_back(json_number(m(i, j)));
        rows.push_back(std::move(r));
    }
    return rows;
}

ordered_json column_major(const Matrix& m) {
    ordered_json v = ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) v.push_back(json_number(m(i, j)));
    }
    return v;
}

std::vector<std::string> coefficient_labels(Index P, Index M) {
    std::vector<std::string> labels;
    for (Index p = 0; p < P; ++p) {
        for (Index m = 0; m < M; ++m) labels.push_back("var" + std::to_string(p + 1) + "_phi" + std::to_string(m + 1));
    }
    return labels;
}

ordered_json labels_one_based(const Partition& p) {
    ordered_json v = ordered_json::array();
    for (int l : p.labels) v.push_back(l + 1);
    return v;
}

ordered_json manifest(const std::string& command, const std::vector<std::string>& args, ordered_json resolved) {
    return {{"tool", "ffkm"},
            {"version", kToolVersion},
            {"command", command},
            {"argv", args},
            {"resolved", std::move(resolved)}};
}

ordered_json gcv_json(const GcvResult& g) {
    ordered_json table = ordered_json::array();
    for (std::size_t i = 0; i < g.lambdas.size(); ++i) {
        table.push_back({{"lambda", g.lambdas[i]}, {"gcv", json_number(g.scores[i])}, {"excluded", bool(g.excluded[i])}});
    }
    return {{"selected", g.lambda}, {"grid", table}};
}

void write_gcv_csv(const fs::path& path, const GcvResult& g) {
    std::vector<io::Row> rows{{"lambda", "gcv", "excluded"}};
    for (std::size_t i = 0; i < g.lambdas.size(); ++i) {
        rows.push_back({io::format_double(g.lambdas[i]), g.excluded[i] ? "NA" : io::format_double(g.scores[i]),
                        g.excluded[i] ? "true" : "false"});
    }
    write_csv(path, rows);
}

ComponentRule parse_rule(const std::string& text) {
    if (text == "mean") return ComponentRule::mean_eigenvalue();
    if (text.rfind("cumulative", 0) == 0) {
        if (text == "cumulative") return ComponentRule::cumulative(0.9);
        if (text.size() > 11 && text[10] == ':') {
            const double c = io::parse_double(text.substr(11), "cumulative cutoff");
            if (!(c > 0.0 && c <= 1.0)) throw ConfigError("cumulative cutoff must lie in (0, 1]");
            return ComponentRule::cumulative(c);
        }
    }
    throw ConfigError("unknown --r-rule '" + text + "' (valid: cumulative, cumulative:<c>, mean)");
}

int cmd_fit(const FitOptions& fo, const InputOptions& io_opts, const LambdaOptions& lo,
            const std::vector<std::string>& args, std::ostream& out) {
    const sim::Method method = sim::parse_method(fo.method);
    if (fo.K < 2) throw ConfigError("K must be at least 2, got " + std::to_string(fo.K));
    if (fo.L < 1) throw ConfigError("L must be at least 1, got " + std::to_string(fo.L));
    if (method != sim::Method::ffkm2 && (fo.R || !fo.r_rule.empty())) {
        throw ConfigError("--r and --r-rule apply to method ffkm2 only");
    }
    const fs::path dir = prepare_out(fo.out);
    WarningCapture warnings;

    LoadedInput in = load_input(io_opts);
    double lambda = lo.lambda.value_or(0.0);
    std::optional<GcvResult> gcv;
    if (lo.gcv) {
        const auto grid = lambda_grid(lo);
        gcv = gcv_select(in.samples, *in.basis, grid);
        lambda = gcv->lambda;
        write_gcv_csv(dir / "gcv.csv", *gcv);
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");

    FunctionalDataset dataset = center(fit_coefficients(in.samples, in.basis, lambda));
    if (fo.standardize) dataset = standardize(dataset);

    FfkmConfig config;
    config.K = fo.K;
    config.L = fo.L;
    config.n_starts = fo.starts.value_or(method == sim::Method::fpck || method == sim::Method::tandem ? 100 : 1000);
    config.seed = fo.seed;
    config.threads = fo.threads;
    config.max_iter = fo.max_iter;
    config.rel_tol = fo.rel_tol;

    ordered_json two_step;
    FitResult fit;
    switch (method) {
        case sim::Method::ffkm:
            fit = lambda > 0.0 ? ffkm_regularized_fit(dataset, config) : ffkm_fit(dataset, config);
            break;
        case sim::Method::fpck: fit = fpck_fit(dataset, config); break;
        case sim::Method::tandem: fit = tandem_fit(dataset, config); break;
        case sim::Method::ffkm2: {
            const FpcaResult probe = fpca(dataset, 1);
            ComponentRule rule;
            std::string rule_text;
            if (fo.R) {
                rule = ComponentRule::fixed(*fo.R);
                rule_text = "fixed";
            } else if (!fo.r_rule.empty()) {
                rule = parse_rule(fo.r_rule);
                rule_text = fo.r_rule;
            } else {
                const Index r_cum = select_components(probe.spectrum, ComponentRule::cumulative(0.9));
                const Index r_mean = select_components(probe.spectrum, ComponentRule::mean_eigenvalue());
                if (r_cum != r_mean) {
                    throw ConfigError("component rules disagree: cumulative 90% gives R = " + std::to_string(r_cum) +
                                      ", mean eigenvalue gives R = " + std::to_string(r_mean) +
                                      "; choose with --r or --r-rule");
                }
                rule = ComponentRule::fixed(r_cum);
                rule_text = "cumulative+mean";
            }
            fit = two_step_ffkm(dataset, config, rule);
            two_step = {{"R", fit.reduced_dimension},
                        {"rule", rule_text},
                        {"reduced_loss", json_number(fit.reduced_loss)},
                        {"fpca_eigenvalues", std::vector<double>(fit.fpca_spectrum.data(),
                                                                 fit.fpca_spectrum.data() + fit.fpca_spectrum.size())}};
            break;
        }
    }

    const auto ids = object_ids(in.samples);
    const Index P = dataset.n_variables();
    const Index M = dataset.basis_size();
    std::vector<std::string> var_names;
    for (const auto& v : in.samples.variables) var_names.push_back(v.name);

    std::optional<double> ari;
    if (!io_opts.labels.empty()) {
        const auto truth = io::read_labels(io_opts.labels, ids);
        ari = sim::adjusted_rand_index(std::span<const int>(truth), std::span<const int>(fit.partition.labels));
    }

    ordered_json result;
    result["method"] = sim::method_name(method);
    result["K"] = fo.K;
    result["L"] = fo.L;
    result["lambda"] = lambda;
    result["lambda_source"] = lo.gcv ? "gcv" : "fixed";
    result["standardized"] = fo.standardize;
    result["basis"] = {{"kind", "bspline"},
                       {"order", io_opts.basis_order},
                       {"knots", io_opts.knots},
                       {"size", M},
                       {"domain", {in.domain.lo, in.domain.hi}}};
    result["n_objects"] = dataset.n_objects();
    result["variables"] = var_names;
    result["seed"] = fo.seed;
    result["n_starts"] = fit.n_starts;
    result["best_start_index"] = fit.best_start_index;
    result["converged"] = fit.converged;
    result["loss"] = json_number(fit.loss);
    result["loss_trace"] = fit.loss_trace;
    result["object_ids"] = ids;
    result["labels"] = labels_one_based(fit.partition);
    result["cluster_sizes"] = fit.partition.sizes;
    result["weights"] = {{"rows", fit.weights.A_H.rows()},
                         {"cols", fit.weights.A_H.cols()},
                         {"row_labels", coefficient_labels(P, M)},
                         {"column_major", column_major(fit.weights.A_H)}};
    result["scores"] = matrix_rows(fit.scores);
    if (!two_step.is_null()) result["two_step"] = two_step;
    if (gcv) result["gcv"] = gcv_json(*gcv);
    if (ari) result["ari"] = *ari;
    result["warnings"] = warnings.messages();
    write_json(dir / "result.json", result);

    std::vector<io::Row> scores{{"object_id"}}, labels{{"object_id", "label"}}, coefs{{"object_id"}};
    for (Index l = 0; l < fit.scores.cols(); ++l) scores[0].push_back("score" + std::to_string(l + 1));
    for (const auto& c : coefficient_labels(P, M)) coefs[0].push_back(c);
    for (Index n = 0; n < dataset.n_objects(); ++n) {
        io::Row s{ids[n]}, c{ids[n]};
        for (Index l = 0; l < fit.scores.cols(); ++l) s.push_back(io::format_double(fit.scores(n, l)));
        for (Index j = 0; j < dataset.dimension(); ++j) c.push_back(io::format_double(dataset.coefficients()(n, j)));
        scores.push_back(std::move(s));
        coefs.push_back(std::move(c));
        labels.push_back({ids[n], std::to_string(fit.partition.labels[n] + 1)});
    }
    write_csv(dir / "scores.csv", scores);
    write_csv(dir / "labels.csv", labels);
    write_csv(dir / "coefficients.csv", coefs);

    std::vector<io::Row> wrows{{"component", "variable", "t", "value"}};
    for (Index p = 0; p < P; ++p) {
        const auto& grid = in.samples.variables[p].grid;
        const auto curves = weight_functions_on_grid(fit.weights, dataset.basis(), dataset.metric(), grid);
        for (Index l = 0; l < fit.weights.L(); ++l) {
            for (std::size_t t = 0; t < grid.size(); ++t) {
                wrows.push_back({std::to_string(l + 1), var_names[p], io::format_double(grid[t]),
                                 io::format_double(curves[l](p, static_cast<Index>(t)))});
            }
        }
    }
    write_csv(dir / "weights.csv", wrows);

    ordered_json resolved = {{"method", sim::method_name(method)},
                             {"K", fo.K},
                             {"L", fo.L},
                             {"lambda", lambda},
                             {"n_starts", config.n_starts},
                             {"max_iter", config.max_iter},
                             {"rel_tol", config.rel_tol},
                             {"seed", fo.seed},
                             {"threads", fo.threads},
                             {"basis_order", io_opts.basis_order},
                             {"knots", io_opts.knots},
                             {"standardize", fo.standardize}};
    if (!two_step.is_null()) resolved["R"] = two_step["R"];
    write_json(dir / "manifest.json", manifest("fit", args, resolved));

    out << "loss " << io::format_double(fit.loss) << "\n";
    if (ari) out << "ARI " << io::format_double(*ari) << "\n";
    out << "wrote " << dir.string() << "\n";
    return Exit::ok;
}

int cmd_gcv(const InputOptions& io_opts, const LambdaOptions& lo, const std::string& out_dir,
            const std::vector<std::string>& args, std::ostream& out) {
    const auto grid = lambda_grid(lo);
    const fs::path dir = prepare_out(out_dir);
    WarningCapture warnings;
    LoadedInput in = load_input(io_opts);
    const GcvResult g = gcv_select(in.samples, *in.basis, grid);
    write_gcv_csv(dir / "gcv.csv", g);
    ordered_json j = gcv_json(g);
    j["warnings"] = warnings.messages();
    write_json(dir / "gcv.json", j);
    write_json(dir / "manifest.json",
               manifest("gcv", args, {{"grid", grid}, {"basis_order", io_opts.basis_order}, {"knots", io_opts.knots}}));
    out << "lambda " << io::format_double(g.lambda) << "\n";
    return Exit::ok;
}

ordered_json design_json(const sim::SimDesign& d) {
    return {{"N", d.N},          {"PO", d.PO},   {"rank_G1", sim::rank_name(d.rank_G1)},
            {"rank_G2", sim::rank_name(d.rank_G2)}, {"NN", d.NN}, {"K", d.K},
            {"L", d.L},          {"M", d.M},     {"T", d.T},
            {"knots", d.n_knots}, {"order", d.order}};
}

int cmd_simulate(const SimulateOptions& so, const std::vector<std::string>& args, std::ostream& out) {
    const fs::path dir = prepare_out(so.out);
    sim::SimTruth truth;
    ordered_json design;
    if (so.example1) {
        sim::Example1Design e;
        e.N = so.N;
        e.PO = so.PO;
        e.noise_sd = so.noise_sd;
        Rng rng(derive_seed(so.seed, static_cast<std::uint64_t>(so.replicate)));
        truth = sim::generate_example1(e, rng);
        design = {{"scenario", "example1"}, {"N", e.N}, {"PO", e.PO}, {"noise_sd", e.noise_sd}, {"T", e.T}};
    } else {
        sim::SimDesign d;
        d.N = so.N;
        d.PO = so.PO;
        d.rank_G1 = sim::parse_rank(so.rank_g1);
        d.rank_G2 = sim::parse_rank(so.rank_g2);
        d.NN = so.NN;
        d.validate();
        // Same stream as replicate `so.replicate` of this cell in an experiment with the same seed.
        const std::uint64_t rep_seed = derive_seed(sim::cell_seed(so.seed, d), static_cast<std::uint64_t>(so.replicate));
        Rng rng(derive_seed(rep_seed, 0));
        truth = sim::generate_dataset(d, rng);
        design = design_json(d);
        design["scenario"] = "design";
    }
    design["seed"] = so.seed;
    design["replicate"] = so.replicate;

    std::vector<io::Row> curves{{"object_id", "variable", "t", "value"}};
    for (const auto& v : truth.curves.variables) {
        for (Index n = 0; n < v.values.rows(); ++n) {
            for (std::size_t t = 0; t < v.grid.size(); ++t) {
                curves.push_back({truth.curves.object_ids[n], v.name, io::format_double(v.grid[t]),
                                  io::format_double(v.values(n, static_cast<Index>(t)))});
            }
        }
    }
    write_csv(dir / "curves.csv", curves);
    std::vector<io::Row> labels{{"object_id", "label"}};
    for (Index n = 0; n < truth.reference.n_objects(); ++n) {
        labels.push_back({truth.curves.object_ids[n], std::to_string(truth.reference.labels[n] + 1)});
    }
    write_csv(dir / "labels.csv", labels);

    const auto& grid = truth.curves.variables.front().grid;
    ordered_json side = {{"domain", {grid.front(), grid.back()}}};
    write_json(dir / "sidecar.json", side);

    const Index P = truth.curves.n_variables();
    const Index M = truth.G_H.cols() / P;
    ordered_json t = {{"design", design},
                      {"object_ids", truth.curves.object_ids},
                      {"planted_labels", labels_one_based(truth.planted)},
                      {"reference_labels", labels_one_based(truth.reference)},
                      {"F", matrix_rows(truth.F)},
                      {"A_true", {{"rows", truth.A_true.rows()},
                                  {"cols", truth.A_true.cols()},
                                  {"row_labels", coefficient_labels(P, M)},
                                  {"column_major", column_major(truth.A_true)}}}};
    write_json(dir / "truth.json", t);
    write_json(dir / "manifest.json", manifest("simulate", args, design));
    out << "wrote " << dir.string() << "\n";
    return Exit::ok;
}

std::vector<sim::SimDesign> parse_cells(const std::string& text) {
    if (text == "desk") return sim::desk_cells();
    if (text == "all") return sim::enumerate_cells();
    static const std::regex pattern(R"(N(\d+)_PO([^_]+)_(FR|RD)-(FR|RD)_NN(\d+))");
    std::vector<sim::SimDesign> cells;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::smatch m;
        if (!std::regex_match(item, m, pattern)) {
            throw ConfigError("cannot parse cell '" + item + "' (expected desk, all, or labels like N100_PO0.05_FR-RD_NN1)");
        }
        sim::SimDesign d;
        d.N = static_cast<int>(io::parse_integer(m[1], "N"));
        d.PO = io::parse_double(m[2], "PO");
        d.rank_G1 = sim::parse_rank(m[3]);
        d.rank_G2 = sim::parse_rank(m[4]);
        d.NN = static_cast<int>(io::parse_integer(m[5], "NN"));
        d.validate();
        cells.push_back(d);
    }
    if (cells.empty()) throw ConfigError("no cells selected");
    return cells;
}

int cmd_experiment(const ExperimentOptions& eo, const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
    const auto cells = parse_cells(eo.all_cells ? "all" : eo.cells);
    sim::ExperimentConfig config;
    config.replicates = eo.replicates;
    config.seed = eo.seed;
    config.starts_ffkm = eo.starts;
    config.starts_other = eo.other_starts;
    config.threads = eo.threads;
    config.timing = !eo.no_timing;
    if (!eo.methods.empty()) {
        config.methods.clear();
        for (const auto& m : eo.methods) config.methods.push_back(sim::parse_method(m));
    }
    if (config.replicates < 1) throw ConfigError("replicates must be positive");
    if (config.starts_ffkm < 1 || config.starts_other < 1) throw ConfigError("start counts must be positive");

    ordered_json methods = ordered_json::array();
    for (auto m : config.methods) methods.push_back(sim::method_name(m));
    ordered_json cell_list = ordered_json::array();
    for (const auto& c : cells) cell_list.push_back(c.label());
    ordered_json resolved = {{"cells", cell_list},        {"replicates", config.replicates},
                             {"methods", methods},        {"seed", config.seed},
                             {"starts", config.starts_ffkm}, {"other_starts", config.starts_other},
                             {"threads", config.threads}, {"timing", config.timing}};
    if (eo.dry_run) {
        out << "cells " << cells.size() << "\n";
        out << "datasets " << cells.size() * static_cast<std::size_t>(config.replicates) << "\n";
        out << "fits " << cells.size() * static_cast<std::size_t>(config.replicates) * config.methods.size() << "\n";
        return Exit::ok;
    }
    const fs::path dir = prepare_out(eo.out);
    WarningCapture warnings;
    const auto rows = sim::run_experiment(cells, config, [&](std::size_t done, std::size_t total) {
        err << "replicate " << done << "/" << total << "\n";
    });
    std::ostringstream csv;
    sim::write_results_csv(csv, rows);
    write_text(dir / "results.csv", csv.str());
    write_text(dir / "summary.json", sim::summarize(rows).dump(2) + "\n");
    write_json(dir / "manifest.json", manifest("experiment", args, resolved));
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
    out << "rows " << rows.size() << " failed " << failed << "\n";
    out << "wrote " << dir.string() << "\n";
    return Exit::ok;
}

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
    std::ifstream f(manifest_path);
    if (!f) throw InputError("cannot open '" + manifest_path + "'");
    json m;
    try {
        m = json::parse(f);
    } catch (const json::exception& e) {
        throw InputError("'" + manifest_path + "' is not valid JSON: " + e.what());
    }
    if (!m.contains("argv") || !m["argv"].is_array()) throw InputError("manifest lacks argv");
    auto argv = m["argv"].get<std::vector<std::string>>();
    if (!argv.empty() && argv.front() == "rerun") throw InputError("a rerun manifest cannot be rerun");
    if (!out_dir.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i < argv.size(); ++i) {
            if (argv[i] == "--out" && i + 1 < argv.size()) {
                argv[i + 1] = out_dir;
                replaced = true;
            } else if (argv[i].rfind("--out=", 0) == 0) {
                argv[i] = "--out=" + out_dir;
                replaced = true;
            }
        }
        if (!replaced) {
            argv.push_back("--out");
            argv.push_back(out_dir);
        }
    }
    return run_parsed(argv, out, err);
}

int error_exit(std::ostream& err, const char* kind, const std::string& message, int code,
               const std::string& out_dir = {}) {
    ordered_json j = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    err << j.dump(2) << "\n";
    std::error_code ec;
    if (!out_dir.empty() && fs::is_directory(out_dir, ec)) {
        std::ofstream f(fs::path(out_dir) / "error.json", std::ios::binary);
        if (f) f << j.dump(2) << "\n";
    }
    return code;
}

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Functional factorial k-means: clustering with simultaneous subspace estimation for functional data",
                 "ffkm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    FitOptions fo;
    InputOptions fit_in;
    LambdaOptions fit_lam;
    auto* fit = app.add_subcommand("fit", "Cluster curves and estimate the clustering subspace");
    add_input_options(fit, fit_in);
    fit->add_option("--labels", fit_in.labels, "Labels CSV (object_id,label) to score the partition by ARI");
    add_lambda_options(fit, fit_lam, true);
    fit->add_option("--method", fo.method, "ffkm, ffkm2, fpck or tandem")->capture_default_str();
    fit->add_option("--k", fo.K, "Number of clusters")->capture_default_str();
    fit->add_option("--l", fo.L, "Subspace dimension")->capture_default_str();
    fit->add_option("--starts", fo.starts, "Random starts (default 1000 for ffkm and ffkm2, 100 otherwise)");
    fit->add_option("--seed", fo.seed, "Seed of all random draws")->capture_default_str();
    fit->add_option("--threads", fo.threads, "Worker threads for the random starts")->capture_default_str();
    fit->add_option("--max-iter", fo.max_iter, "ALS iteration limit per start")->capture_default_str();
    fit->add_option("--rel-tol", fo.rel_tol, "Relative loss change that stops a start")->capture_default_str();
    auto* r_opt = fit->add_option("--r", fo.R, "ffkm2: number of principal components kept");
    auto* rule_opt = fit->add_option("--r-rule", fo.r_rule, "ffkm2: cumulative, cumulative:<c> or mean");
    r_opt->excludes(rule_opt);
    fit->add_flag("--standardize", fo.standardize, "Scale whitened coefficient columns to unit variance");
    fit->add_option("--out", fo.out, "Output directory")->required();

    InputOptions gcv_in;
    LambdaOptions gcv_lam;
    std::string gcv_out;
    auto* gcv = app.add_subcommand("gcv", "Generalized cross-validation score over a grid of roughness penalties");
    add_input_options(gcv, gcv_in);
    add_lambda_options(gcv, gcv_lam, false);
    gcv->add_option("--out", gcv_out, "Output directory")->required();

    SimulateOptions so;
    auto* simulate = app.add_subcommand("simulate", "Generate one simulated dataset with its ground truth");
    simulate->add_option("--n", so.N, "Number of objects")->capture_default_str();
    simulate->add_option("--po", so.PO, "Proportion of overlap between adjacent clusters")->capture_default_str();
    simulate->add_option("--rank-g1", so.rank_g1, "FR or RD")->capture_default_str();
    simulate->add_option("--rank-g2", so.rank_g2, "FR or RD")->capture_default_str();
    simulate->add_option("--nn", so.NN, "Non-informative variables")->capture_default_str();
    simulate->add_option("--replicate", so.replicate, "Replicate index within the cell")->capture_default_str();
    simulate->add_option("--seed", so.seed, "Base seed")->capture_default_str();
    simulate->add_flag("--example1", so.example1, "Masking-noise scenario instead of a design cell");
    simulate->add_option("--noise-sd", so.noise_sd, "Noise scale of the masking scenario")->capture_default_str();
    simulate->add_option("--out", so.out, "Output directory")->required();

    ExperimentOptions eo;
    auto* experiment = app.add_subcommand("experiment", "Run the simulation study and write tidy results");
    auto* cells_opt = experiment->add_option("--cells", eo.cells, "desk, all, or comma-separated cell labels")
                          ->capture_default_str();
    experiment->add_flag("--all-cells", eo.all_cells, "All 144 cells of the full design")->excludes(cells_opt);
    experiment->add_option("--replicates", eo.replicates, "Replicates per cell")->capture_default_str();
    experiment->add_option("--methods", eo.methods, "Subset of ffkm, ffkm2, fpck, tandem")->delimiter(',');
    experiment->add_option("--seed", eo.seed, "Base seed")->capture_default_str();
    experiment->add_option("--starts", eo.starts, "Starts of ffkm and ffkm2")->capture_default_str();
    experiment->add_option("--other-starts", eo.other_starts, "Starts of fpck and tandem")->capture_default_str();
    experiment->add_option("--threads", eo.threads, "Worker threads for the random starts")->capture_default_str();
    experiment->add_flag("--no-timing", eo.no_timing, "Write NA runtimes so outputs are reproducible byte for byte");
    experiment->add_flag("--dry-run", eo.dry_run, "Print the workload and exit");
    experiment->add_option("--out", eo.out, "Output directory");

    std::string rerun_manifest, rerun_out;
    auto* rerun = app.add_subcommand("rerun", "Re-execute the command recorded in a manifest");
    rerun->add_option("manifest", rerun_manifest, "manifest.json of an earlier run")->required();
    rerun->add_option("--out", rerun_out, "Write to this directory instead of the recorded one");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Exit::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Exit::ok;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return Exit::ok;
    } catch (const CLI::ParseError& e) {
        return error_exit(err, "usage", e.what(), Exit::usage);
    }

    std::string out_dir;
    if (*fit) out_dir = fo.out;
    if (*gcv) out_dir = gcv_out;
    if (*simulate) out_dir = so.out;
    if (*experiment) out_dir = eo.out;
    try {
        if (*fit) return cmd_fit(fo, fit_in, fit_lam, args, out);
        if (*gcv) return cmd_gcv(gcv_in, gcv_lam, gcv_out, args, out);
        if (*simulate) return cmd_simulate(so, args, out);
        if (*experiment) {
            if (!eo.dry_run && eo.out.empty()) throw ConfigError("--out directory is required");
            return cmd_experiment(eo, args, out, err);
        }
        if (*rerun) return cmd_rerun(rerun_manifest, rerun_out, out, err);
    } catch (const ConfigError& e) {
        return error_exit(err, e.kind(), e.what(), Exit::usage, out_dir);
    } catch (const InputError& e) {
        return error_exit(err, e.kind(), e.what(), Exit::bad_input, out_dir);
    } catch (const RankDeficiencyError& e) {
        return error_exit(err, e.kind(), e.what(), Exit::numerical, out_dir);
    } catch (const Error& e) {
        return error_exit(err, e.kind(), e.what(), Exit::failure, out_dir);
    } catch (const std::exception& e) {
        return error_exit(err, "internal_error", e.what(), Exit::failure, out_dir);
    }
    return error_exit(err, "usage", "no command given", Exit::usage);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return run_parsed(args, out, err);
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace ffkm::cli
