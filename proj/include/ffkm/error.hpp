#pragma once

#include <stdexcept>
#include <string>

namespace ffkm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid parameters (cluster counts, basis orders, grids of lambda values, ...).
class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config_error"; }
};

/// Malformed or nonconforming data.
class InputError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "input_error"; }
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "rank_deficiency"; }
};

class UnsupportedBasisError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "unsupported_basis"; }
};

}  // namespace ffkm
