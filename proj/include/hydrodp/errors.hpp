#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hydrodp {

// Scenario data violates an invariant (CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file cannot be parsed (CLI exit code 2).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested model does not apply to the scenario shape (CLI exit code 3).
class ApplicabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Enumeration would exceed the configured budget (CLI exit code 3).
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, double computed_size)
        : std::runtime_error(what), computed_size(computed_size) {}
    double computed_size;
};

} // namespace hydrodp
