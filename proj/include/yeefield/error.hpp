// Copyright 2026 The yeefield Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef YEEFIELD_ERROR_HPP
#define YEEFIELD_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace yeefield {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid geometric parameters; names the offending dimension.
class GeometryError : public Error {
public:
    GeometryError(std::string dimension, const std::string &what)
        : Error(dimension + ": " + what), dimension_(std::move(dimension)) {}
    const std::string &dimension() const noexcept { return dimension_; }

private:
    std::string dimension_;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Field blow-up detected during time stepping.
class DivergenceError : public Error {
public:
    explicit DivergenceError(long step)
        : Error("field divergence detected at step " + std::to_string(step)), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Malformed input file; carries the 1-based line number (0 if unknown).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// S-matrix assembly without an excitation for every port.
class IncompleteMatrixError : public Error {
public:
    explicit IncompleteMatrixError(std::vector<int> missing)
        : Error("incomplete S-matrix: no excitation for port(s)" + list(missing)), missing_(std::move(missing)) {}
    const std::vector<int> &missing() const noexcept { return missing_; }

private:
    static std::string list(const std::vector<int> &v) {
        std::string s;
        for (int p : v) s += " " + std::to_string(p);
        return s;
    }
    std::vector<int> missing_;
};

} // namespace yeefield

#endif
