#pragma once

#include <stdexcept>
#include <string>

namespace sqlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of the operation (n = 0, r = 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Request exceeds a documented size limit (range too large, cutoff too large).
class CapacityError : public Error {
public:
    using Error::Error;
};

/// gcd(a, q) > 1 where an inverse mod q was required.
class NotInvertibleError : public Error {
public:
    using Error::Error;
};

/// Exact arithmetic result does not fit the fixed-width representation.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// Caller violated a hypothesis of the formula (q | rs, q | r, ...).
class HypothesisError : public Error {
public:
    using Error::Error;
};

}  // namespace sqlab
