#pragma once

#include <string>
#include <vector>

#include "ffkm/linalg.hpp"

namespace ffkm {

/// One functional variable observed for every object on a shared grid.
struct VariableSamples {
    std::string name;
    std::vector<double> grid;  // strictly increasing, length T
    Matrix values;             // N x T
};

/// Discretized curves x_npt. Variables may use different grids; objects share each grid.
struct CurveSamples {
    std::vector<std::string> object_ids;  // optional; empty or length N
    std::vector<VariableSamples> variables;

    Index n_objects() const { return variables.empty() ? 0 : variables.front().values.rows(); }
    Index n_variables() const { return static_cast<Index>(variables.size()); }

    /// Throws InputError on ragged shapes, unsorted grids, or non-finite values.
    void validate() const;
};

}  // namespace ffkm
