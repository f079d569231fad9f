#pragma once

#include <stdexcept>
#include <string>

namespace tpmkl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated file; the message names the path and byte offset.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid argument values (out-of-range sizes, bad flags).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A pyramid level would contain empty nodes for the given frame count.
class GranularityError : public Error {
public:
    using Error::Error;
};

/// Dimension or ordering mismatch between matrices, vectors, or node sets.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Kernel with zero trace, or a matrix that is not PSD within tolerance.
class KernelError : public Error {
public:
    using Error::Error;
};

/// Training problem without both classes (or a class without samples).
class DegenerateProblemError : public Error {
public:
    using Error::Error;
};

/// Iterative solver made no progress within its pivot/iteration budget.
class SolverStallError : public Error {
public:
    using Error::Error;
};

}  // namespace tpmkl
