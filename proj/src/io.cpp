#include "ffkm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "ffkm/error.hpp"

namespace ffkm::io {

std::vector<Row> read_csv(std::istream& in) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char c;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        const bool blank = row.empty() && field.empty() && !field_started;
        end_field();
        if (!blank) rows.push_back(std::move(row));
        row.clear();
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started || !field.empty()) {
                    throw InputError("CSV: stray quote inside an unquoted field (record " +
                                     std::to_string(rows.size() + 1) + ")");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (in.peek() == '\n') in.get(c);
                end_row();
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw InputError("CSV: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::vector<Row> read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return read_csv(in);
}

void write_csv_row(std::ostream& out, const Row& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\r\n") == std::string::npos) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << "\r\n";
}

std::string format_double(double x) {
    if (std::isnan(x)) return "NaN";
    if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

double parse_double(const std::string& field, const std::string& what) {
    const std::string s = trim(field);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("cannot parse " + what + " '" + field + "' as a number");
    }
    return v;
}

long long parse_integer(const std::string& field, const std::string& what) {
    const std::string s = trim(field);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("cannot parse " + what + " '" + field + "' as an integer");
    }
    return v;
}

CurveSamples read_dense(const std::vector<DenseInput>& files) {
    if (files.empty()) throw InputError("no input files given");
    CurveSamples out;
    for (const auto& f : files) {
        const auto rows = read_csv_file(f.path);
        if (rows.size() < 2) throw InputError("'" + f.path.string() + "' has no data rows");
        const Row& header = rows[0];
        if (header.size() < 2) throw InputError("'" + f.path.string() + "': header needs id and grid columns");
        VariableSamples v;
        v.name = f.variable;
        for (std::size_t j = 1; j < header.size(); ++j) {
            v.grid.push_back(parse_double(header[j], "grid point in " + f.path.string()));
        }
        const Index T = static_cast<Index>(v.grid.size());
        v.values.resize(static_cast<Index>(rows.size() - 1), T);
        std::vector<std::string> ids;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const Row& r = rows[i];
            if (static_cast<Index>(r.size()) != T + 1) {
                throw InputError("'" + f.path.string() + "' row " + std::to_string(i + 1) + " has " +
                                 std::to_string(r.size()) + " fields, expected " + std::to_string(T + 1));
            }
            ids.push_back(r[0]);
            for (Index t = 0; t < T; ++t) {
                v.values(static_cast<Index>(i - 1), t) = parse_double(r[t + 1], "value in " + f.path.string());
            }
        }
        if (out.variables.empty()) {
            out.object_ids = std::move(ids);
        } else if (ids != out.object_ids) {
            throw InputError("'" + f.path.string() + "' lists different object ids than the first file");
        }
        out.variables.push_back(std::move(v));
    }
    out.validate();
    return out;
}

CurveSamples read_long(const std::filesystem::path& path) {
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw InputError("'" + path.string() + "' is empty");
    const Row& header = rows[0];
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw InputError("'" + path.string() + "' lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_obj = column("object_id"), c_var = column("variable"), c_t = column("t"),
                      c_val = column("value");

    std::vector<std::string> objects, variables;
    std::map<std::string, std::size_t> obj_index, var_index;
    // samples[var][obj] = (t, value) pairs
    std::vector<std::vector<std::vector<std::pair<double, double>>>> samples;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (r.size() != header.size()) {
            throw InputError("'" + path.string() + "' row " + std::to_string(i + 1) + " has " +
                             std::to_string(r.size()) + " fields, expected " + std::to_string(header.size()));
        }
        auto [oit, onew] = obj_index.emplace(r[c_obj], objects.size());
        if (onew) {
            objects.push_back(r[c_obj]);
            for (auto& s : samples) s.emplace_back();
        }
        auto [vit, vnew] = var_index.emplace(r[c_var], variables.size());
        if (vnew) {
            variables.push_back(r[c_var]);
            samples.emplace_back(objects.size());
        }
        const double t = parse_double(r[c_t], "t");
        const double v = parse_double(r[c_val], "value");
        samples[vit->second][oit->second].emplace_back(t, v);
    }
    if (objects.empty()) throw InputError("'" + path.string() + "' has no data rows");

    CurveSamples out;
    out.object_ids = objects;
    for (std::size_t p = 0; p < variables.size(); ++p) {
        VariableSamples v;
        v.name = variables[p];
        for (std::size_t n = 0; n < objects.size(); ++n) {
            auto& s = samples[p][n];
            std::sort(s.begin(), s.end());
            std::vector<double> grid;
            for (const auto& [t, _] : s) grid.push_back(t);
            if (n == 0) {
                v.grid = grid;
                v.values.resize(static_cast<Index>(objects.size()), static_cast<Index>(grid.size()));
            } else if (grid != v.grid) {
                throw InputError("variable '" + v.name + "': object '" + objects[n] +
                                 "' is sampled on a different grid than object '" + objects[0] + "'");
            }
            for (std::size_t t = 0; t < s.size(); ++t) {
                v.values(static_cast<Index>(n), static_cast<Index>(t)) = s[t].second;
            }
        }
        out.variables.push_back(std::move(v));
    }
    out.validate();
    return out;
}

Sidecar read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    Sidecar s;
    try {
        if (j.contains("domain")) {
            const auto& d = j.at("domain");
            if (!d.is_array() || d.size() != 2) throw InputError("sidecar 'domain' must be [lo, hi]");
            s.domain = {d[0].get<double>(), d[1].get<double>()};
            if (!(s.domain.lo < s.domain.hi)) throw InputError("sidecar 'domain' must satisfy lo < hi");
            s.has_domain = true;
        }
        if (j.contains("variable_names")) {
            s.variable_names = j.at("variable_names").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("'" + path.string() + "': " + e.what());
    }
    return s;
}

Domain grid_domain(const CurveSamples& samples) {
    Domain d{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : samples.variables) {
        if (v.grid.empty()) continue;
        d.lo = std::min(d.lo, v.grid.front());
        d.hi = std::max(d.hi, v.grid.back());
    }
    if (!(d.lo < d.hi)) throw InputError("sampling grid does not span an interval");
    return d;
}

std::vector<int> read_labels(const std::filesystem::path& path, const std::vector<std::string>& object_ids) {
    const auto rows = read_csv_file(path);
    if (rows.empty()) throw InputError("'" + path.string() + "' is empty");
    const Row& header = rows[0];
    auto c_obj = std::find(header.begin(), header.end(), "object_id") - header.begin();
    auto c_lab = std::find(header.begin(), header.end(), "label") - header.begin();
    if (c_obj == static_cast<long>(header.size()) || c_lab == static_cast<long>(header.size())) {
        throw InputError("'" + path.string() + "' needs columns object_id and label");
    }
    std::map<std::string, int> code;
    std::map<std::string, int> by_object;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const Row& r = rows[i];
        if (r.size() != header.size()) throw InputError("'" + path.string() + "': ragged row " + std::to_string(i + 1));
        auto [it, _] = code.emplace(r[c_lab], static_cast<int>(code.size()));
        by_object[r[c_obj]] = it->second;
    }
    std::vector<int> labels;
    labels.reserve(object_ids.size());
    for (const auto& id : object_ids) {
        auto it = by_object.find(id);
        if (it == by_object.end()) throw InputError("no label for object '" + id + "'");
        labels.push_back(it->second);
    }
    return labels;
}

}  // namespace ffkm::io
