#pragma once

#include <stdexcept>
#include <string>

namespace harmoniums {

/// Thrown when an iterative routine fails to converge or a computation
/// produces non-finite values.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when an exact computation would exceed its enumeration budget
/// (e.g. Boltzmann machines with too many neurons).
class budget_error : public std::runtime_error {
public:
    explicit budget_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when an operation is not defined for the requested model class.
class unsupported_error : public std::runtime_error {
public:
    explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace harmoniums
