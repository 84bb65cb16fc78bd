#pragma once

#include <stdexcept>
#include <string>

namespace volidx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV rows, snapshots, series).
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a meaningful result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Raised when exact local affine coefficients are requested from a model
/// whose prediction is not piecewise linear in its inputs.
class NotPiecewiseLinear : public Error {
public:
    using Error::Error;
};

/// The forecast depends on inputs that no option portfolio can replicate.
class NotReplicable : public Error {
public:
    using Error::Error;
};

}  // namespace volidx
