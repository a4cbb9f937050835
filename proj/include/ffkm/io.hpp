#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ffkm/basis.hpp"
#include "ffkm/samples.hpp"

namespace ffkm::io {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends. Blank lines are skipped.
std::vector<Row> read_csv(std::istream& in);
std::vector<Row> read_csv_file(const std::filesystem::path& path);

/// Writes one record, quoting fields that contain a comma, quote, CR or LF. Ends with CRLF.
void write_csv_row(std::ostream& out, const Row& fields);

/// Shortest decimal that round-trips to the same double; "NaN", "Inf", "-Inf" for non-finite values.
std::string format_double(double x);

/// Strict numeric parse of a whole field; throws InputError naming `what` on failure.
double parse_double(const std::string& field, const std::string& what);
long long parse_integer(const std::string& field, const std::string& what);

/**
 * Dense layout, one file per variable. The header row is `id` followed by the
 * grid points; each further row is an object id followed by its T values.
 * Every file must list the same object ids in the same order.
 */
struct DenseInput {
    std::string variable;
    std::filesystem::path path;
};

CurveSamples read_dense(const std::vector<DenseInput>& files);

/**
 * Long layout with header columns object_id, variable, t, value (any order).
 * Objects and variables keep their order of first appearance; samples are
 * sorted by t. All objects of a variable must share one grid.
 */
CurveSamples read_long(const std::filesystem::path& path);

/// Optional JSON sidecar: {"domain": [lo, hi], "variable_names": [...]}.
struct Sidecar {
    bool has_domain = false;
    Domain domain;
    std::vector<std::string> variable_names;
};

Sidecar read_sidecar(const std::filesystem::path& path);

/// Smallest interval holding every grid of the samples.
Domain grid_domain(const CurveSamples& samples);

/**
 * Labels file with header object_id,label. Returns one label per object of
 * `object_ids`, mapped to 0-based integers in order of first appearance in the file.
 */
std::vector<int> read_labels(const std::filesystem::path& path, const std::vector<std::string>& object_ids);

}  // namespace ffkm::io
