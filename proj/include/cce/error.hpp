#pragma once

#include <stdexcept>
#include <string>

namespace cce {

/// Bad user input: wrong shapes, out-of-domain outcomes or indices, malformed files.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure: singular or ill-conditioned matrices, eigen-solver failure.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cce
