#pragma once

#include <stdexcept>
#include <string>

namespace ghch {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad grid size, m <= 0, t out of range...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Problem data cannot produce a usable weight (nonpositive root argument, w1 <= 0).
class DegenerateWeightError : public Error {
public:
    using Error::Error;
};

/// Integrator configuration violates the explicit stability bound.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// Binary or text file does not follow the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ghch
