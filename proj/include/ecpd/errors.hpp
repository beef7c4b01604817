#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecpd {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid caller-supplied data (non-finite values, bad labels, bad params).
struct InvalidInputError : Error {
    using Error::Error;
};

/// A split that leaves a cluster with fewer than two observations.
struct DegenerateSplitError : Error {
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number.
struct ParseError : Error {
    ParseError(std::size_t line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
    std::size_t line;
};

/// Two rows claim the same (year, week, sex) key.
struct DuplicateDataError : Error {
    using Error::Error;
};

/// A required (group, week-of-year) baseline cell has no observations.
struct MissingBaselineError : Error {
    using Error::Error;
};

/// Excess rate requested where the baseline median is zero.
struct ZeroMedianError : Error {
    using Error::Error;
};

/// Requested week span is absent or non-contiguous.
struct InvalidSpanError : Error {
    using Error::Error;
};

}  // namespace ecpd
