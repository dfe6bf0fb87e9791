#ifndef OMICSNET_ERRORS_HPP
#define OMICSNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace omicsnet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration / arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that violates a precondition (bad CSV, empty cohort, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: divergence, non-finite loss, non-convergence.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace omicsnet

#endif
