#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecpd/errors.hpp"

namespace ecpd {

/// A time-ordered T x d matrix of finite reals with row (time) and
/// column (dimension) labels. Plain aggregate; call validate() after
/// assembling one by hand.
struct MultiSeries {
    std::vector<double> values;            ///< row-major, size T*d
    std::size_t dim = 0;                   ///< d
    std::vector<std::string> time_labels;  ///< size T, strictly increasing
    std::vector<std::string> dim_labels;   ///< size d, unique

    std::size_t rows() const { return time_labels.size(); }

    double at(std::size_t t, std::size_t j) const { return values[t * dim + j]; }

    std::span<const double> row(std::size_t t) const {
        return {values.data() + t * dim, dim};
    }
};

/// Checks the MultiSeries invariants; throws InvalidInputError naming the
/// offending row/column.
inline void validate(const MultiSeries& series) {
    const std::size_t t_count = series.rows();
    if (t_count < 1 || series.dim < 1) {
        throw InvalidInputError("series must have T >= 1 and d >= 1");
    }
    if (series.values.size() != t_count * series.dim) {
        throw InvalidInputError("series values size " + std::to_string(series.values.size()) +
                                " does not match T*d = " +
                                std::to_string(t_count * series.dim));
    }
    if (series.dim_labels.size() != series.dim) {
        throw InvalidInputError("expected " + std::to_string(series.dim) +
                                " dimension labels, got " +
                                std::to_string(series.dim_labels.size()));
    }
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t j = 0; j < series.dim; ++j) {
            if (!std::isfinite(series.at(t, j))) {
                throw InvalidInputError("non-finite value at row " + std::to_string(t) +
                                        " ('" + series.time_labels[t] + "'), column " +
                                        std::to_string(j));
            }
        }
    }
    for (std::size_t t = 1; t < t_count; ++t) {
        if (!(series.time_labels[t - 1] < series.time_labels[t])) {
            throw InvalidInputError("time labels not strictly increasing at row " +
                                    std::to_string(t) + " ('" + series.time_labels[t] + "')");
        }
    }
    for (std::size_t a = 0; a < series.dim; ++a) {
        for (std::size_t b = a + 1; b < series.dim; ++b) {
            if (series.dim_labels[a] == series.dim_labels[b]) {
                throw InvalidInputError("duplicate dimension label '" + series.dim_labels[a] + "'");
            }
        }
    }
}

/// Half-open index interval [start, end) identifying one cluster.
struct SegmentView {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start; }
    bool operator==(const SegmentView&) const = default;
};

}  // namespace ecpd
