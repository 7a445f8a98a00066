#ifndef MBRIDGE_ERRORS_HPP
#define MBRIDGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mbridge {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A measure weight is zero or negative.
struct NonPositiveWeight final : Error { using Error::Error; };

/// A measure has no atoms.
struct EmptySupport final : Error { using Error::Error; };

/// Measure weights do not sum to 1 within the normalization gate.
struct NotNormalized final : Error { using Error::Error; };

/// The two marginals have different means.
struct MeanMismatch final : Error { using Error::Error; };

/// The pair (mu, nu) is not in convex order; no martingale coupling exists.
struct Infeasible final : Error { using Error::Error; };

/// A row barycenter target lies outside the closed hull of the nu atoms.
struct InfeasibleRow final : Error { using Error::Error; };

/// An iterative method exhausted its iteration budget.
struct NonConvergence final : Error { using Error::Error; };

/// A mu atom lies outside the admissible open interval.
struct AtomOutOfRange final : Error { using Error::Error; };

/// Two couplings have different dimensions.
struct ShapeMismatch final : Error { using Error::Error; };

/// An input file could not be parsed into a valid instance.
struct ParseError final : Error { using Error::Error; };

}  // namespace mbridge

#endif  // MBRIDGE_ERRORS_HPP
