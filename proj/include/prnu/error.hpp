#pragma once

#include <stdexcept>
#include <string>

namespace prnu {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// The spoofing termination criterion divides by phi(X, S_o); raised when
/// that score is not strictly positive.
class DegenerateCriterion : public Error {
public:
    using Error::Error;
};

} // namespace prnu
