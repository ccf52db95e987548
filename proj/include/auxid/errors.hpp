#pragma once

#include <stdexcept>
#include <string>

namespace auxid {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument: non-finite entries, out-of-range parameters, asymmetry.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class DimensionError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// Numerical failure of a well-formed request.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Factorization failed or the condition estimate exceeded the guard.
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Spectral radius >= 1 where strict stability is required.
class InstabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The Gelfand envelope scan could not certify kappa within the horizon.
class HorizonTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A quantity that needs recorded process noise was requested on data without it.
class Unavailable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace auxid
