#pragma once

#include <stdexcept>
#include <string>

namespace dplab {

/// Argument outside the mathematical domain of an operation (e.g. m >= N for m*).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Inputs fail a stated precondition (structural validity, residual gate, regime).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its tolerance. Carries what it did reach.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved = 0.0)
        : std::runtime_error(what), achieved_(achieved) {}

    [[nodiscard]] double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

} // namespace dplab
