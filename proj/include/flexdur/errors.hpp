#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexdur {

/// Invalid parameters or out-of-domain arguments.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input files. Carries the 1-based row number when known.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what, std::size_t row = 0)
        : std::runtime_error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"),
          row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Root finding, quadrature or likelihood evaluation failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace flexdur
