#ifndef WAVEGRF_ERROR_HPP
#define WAVEGRF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wavegrf {

/// Base class of all library errors.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration, detected before any computation.
class ConfigError : public Error
{
public:
    using Error::Error;
};

/// Numerical failure: loss of definiteness, CG breakdown, non-finite values.
class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace wavegrf

#endif
