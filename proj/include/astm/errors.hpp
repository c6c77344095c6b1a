#pragma once

#include <stdexcept>
#include <string>

namespace astm {

/// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file or document could not be parsed; message carries path/field context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A domain invariant was violated; message names the invariant.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// A caller passed arguments outside an operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A time or index fell outside the valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Model tensors are inconsistent or unusable.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Minimum green demands cannot fit into the available cycle time.
class InfeasiblePlanError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// A metric has no defined value for this log (e.g. no departures).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// A configuration (plan, experiment, controller) is unusable as given.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem I/O failed; message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace astm
