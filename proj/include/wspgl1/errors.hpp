#pragma once

#include <stdexcept>
#include <string>

namespace wspgl1 {

/// Vector/matrix sizes disagree, or a size parameter is out of range.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf inputs or a negative radius.
class NumericError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A configuration or experiment plan failed validation.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_size(std::ptrdiff_t got, std::ptrdiff_t want, const char* what)
{
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want)
                             + ", got " + std::to_string(got));
    }
}

} // namespace detail
} // namespace wspgl1
