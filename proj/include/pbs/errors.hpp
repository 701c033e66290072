#pragma once

#include <stdexcept>

namespace pbs {

// Bad or inconsistent inputs (wrong dimensions, invalid market data, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Inputs that are well formed but outside the domain where a quantity exists.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical procedure failed to deliver the requested accuracy.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pbs
