#pragma once

#include <stdexcept>
#include <string>

namespace dfpl {

// Contract violation: operand shapes (or argument structure) do not match.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of an operation (log of <= 0, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Non-finite value where a finite one is required (NaN loss, bad grad, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file or unreadable path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dfpl
