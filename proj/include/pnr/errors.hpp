#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace pnr {

using Complex = std::complex<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arguments outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A valid request the implementation deliberately does not cover.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// API used in a way its contract forbids (e.g. evaluating a distribution
/// on a delta support that was not collapsed).
class MisuseError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance. Carries the best
/// estimate so callers can decide whether it is usable.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Complex best_estimate, double error_estimate)
        : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

    Complex best_estimate() const noexcept { return best_estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    Complex best_estimate_;
    double error_estimate_;
};

class NumericalInstabilityError : public Error {
public:
    using Error::Error;
};

/// Hilbert-space dimension or layout mismatch, or a dimension above the cap.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input whose normalisation cannot be trusted (zero-norm or non-Hermitian
/// overlap data).
class IllConditionedError : public DomainError {
public:
    using DomainError::DomainError;
};

class DegenerateStateError : public Error {
public:
    using Error::Error;
};

class InsufficientStatisticsError : public Error {
public:
    using Error::Error;
};

/// Time step too coarse to resolve the jump process.
class ResolutionError : public Error {
public:
    using Error::Error;
};

} // namespace pnr
