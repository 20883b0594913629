#pragma once

#include <stdexcept>
#include <string>

namespace drcf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad hyper-parameter, bad index, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data is malformed or inconsistent.
class DataError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Model file problems. The subclasses let callers tell the failure modes apart.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class ShapeError : public FormatError {
public:
    using FormatError::FormatError;
};

class NonFiniteError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace drcf
