#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace colmat {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration values, malformed config files, bad presets.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// File-format problems; carries the 1-based line number when known (0 = unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Shape mismatches between matrices/vectors.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

// Singular or numerically unusable linear system; carries the failing pivot index.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, std::size_t pivot_index)
        : Error(what + " (pivot " + std::to_string(pivot_index) + ")"), pivot_(pivot_index) {}
    std::size_t pivot_index() const { return pivot_; }

private:
    std::size_t pivot_;
};

// Vector cannot be projected to the simplex (no positive mass).
class DegenerateVectorError : public Error {
public:
    explicit DegenerateVectorError(const std::string& what) : Error(what) {}
};

// A class lacks the members an operation requires; carries the class index.
class UnusableClassError : public Error {
public:
    UnusableClassError(const std::string& what, std::size_t class_index)
        : Error(what + " (class " + std::to_string(class_index) + ")"), class_(class_index) {}
    std::size_t class_index() const { return class_; }

private:
    std::size_t class_;
};

// Operation called on an object in the wrong state (e.g. untrained model).
class StateError : public Error {
public:
    explicit StateError(const std::string& what) : Error(what) {}
};

// Loss became non-finite during training.
class TrainingDivergenceError : public Error {
public:
    explicit TrainingDivergenceError(const std::string& what) : Error(what) {}
};

// Numerical procedure failed to reach its tolerance; carries what it achieved.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what), achieved_(0) {}
    NumericalError(const std::string& what, double achieved_tolerance)
        : Error(what + " (achieved " + std::to_string(achieved_tolerance) + ")"),
          achieved_(achieved_tolerance) {}
    double achieved_tolerance() const { return achieved_; }

private:
    double achieved_;
};

} // namespace colmat
