#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecpd/errors.hpp"
#include "ecpd/series.hpp"

namespace ecpd {

/// Knobs of the energy-distance kernel.
///
/// alpha is the exponent on pairwise Euclidean distances; the moment
/// condition behind the statistic wants alpha in (0,2), and alpha = 2 is
/// additionally admitted as the mean-difference special case.
/// min_segment is the smallest cluster either side of a split may have;
/// the within-cluster averages divide by C(n,2), so it is at least 2.
struct EnergyParams {
    double alpha = 1.0;
    std::size_t min_segment = 2;
};

inline void validate(const EnergyParams& params) {
    if (!(params.alpha > 0.0) || !(params.alpha <= 2.0)) {
        throw InvalidInputError("alpha must be in (0, 2], got " + std::to_string(params.alpha));
    }
    if (params.min_segment < 2) {
        throw InvalidInputError("min_segment must be >= 2, got " +
                                std::to_string(params.min_segment));
    }
}

/// Symmetric T x T matrix of alpha-powered Euclidean distances, computed
/// once per series and shared by every segment evaluation and permutation
/// replicate (a permutation of observations is an index permutation here).
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t n, std::vector<double> entries)
        : n_(n), entries_(std::move(entries)) {}

    std::size_t size() const { return n_; }

    double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> entries_;
};

/// entries[i][j] = |Z_i - Z_j|^alpha with |.| the Euclidean norm.
inline DistanceMatrix alpha_distance_matrix(const MultiSeries& series, double alpha) {
    validate(series);
    if (!(alpha > 0.0) || !(alpha <= 2.0)) {
        throw InvalidInputError("alpha must be in (0, 2], got " + std::to_string(alpha));
    }
    const std::size_t n = series.rows();
    const std::size_t d = series.dim;
    std::vector<double> entries(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* zi = series.values.data() + i * d;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* zj = series.values.data() + j * d;
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = zi[k] - zj[k];
                sq += diff * diff;
            }
            double dist;
            if (alpha == 2.0) {
                dist = sq;
            } else if (alpha == 1.0) {
                dist = std::sqrt(sq);
            } else {
                dist = std::pow(sq, 0.5 * alpha);
            }
            entries[i * n + j] = dist;
            entries[j * n + i] = dist;
        }
    }
    return DistanceMatrix(n, std::move(entries));
}

/// A candidate change point: `split` is the size of the left cluster
/// (equivalently the 1-based index, within the segment, of its last
/// observation) and `q_value` the attained Q statistic.
struct SplitCandidate {
    std::size_t split = 0;
    double q_value = 0.0;
};

namespace detail {

inline void check_segment(const DistanceMatrix& dist, SegmentView seg) {
    if (seg.start >= seg.end || seg.end > dist.size()) {
        throw InvalidInputError("bad segment [" + std::to_string(seg.start) + ", " +
                                std::to_string(seg.end) + ") for T = " +
                                std::to_string(dist.size()));
    }
}

/// Sliding scan for the Q-maximizing split of one segment, O(len^2) overall.
/// `index(i)` maps local positions to rows of `dist`, which makes the same
/// code serve the plain segment case and permutation replicates.
template <typename IndexFn>
std::optional<SplitCandidate> best_split_scan(const DistanceMatrix& dist,
                                              std::size_t len,
                                              std::size_t min_segment,
                                              IndexFn index) {
    if (len < 2 * min_segment) return std::nullopt;

    // Sums at left size t: within_left over pairs {i<j<t}, cross over
    // {i<t<=j}, within_right over {t<=i<j}. Start at t = 1 and slide up,
    // evaluating only admissible t.
    double within_left = 0.0;
    double cross = 0.0;
    double within_right = 0.0;
    const std::size_t i0 = index(0);
    for (std::size_t j = 1; j < len; ++j) {
        cross += dist(i0, index(j));
    }
    for (std::size_t i = 1; i < len; ++i) {
        const std::size_t ii = index(i);
        for (std::size_t j = i + 1; j < len; ++j) {
            within_right += dist(ii, index(j));
        }
    }

    std::optional<SplitCandidate> best;
    for (std::size_t t = 1; t <= len - min_segment; ++t) {
        if (t >= min_segment) {
            const double nl = static_cast<double>(t);
            const double nr = static_cast<double>(len - t);
            const double energy = 2.0 * cross / (nl * nr) -
                                  2.0 * within_left / (nl * (nl - 1.0)) -
                                  2.0 * within_right / (nr * (nr - 1.0));
            const double q = nl * nr / (nl + nr) * energy;
            if (!best || q > best->q_value) {
                best = SplitCandidate{t, q};
            }
        }
        if (t == len - min_segment) break;
        // Move local row t across the boundary.
        const std::size_t moved = index(t);
        double row_left = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            row_left += dist(moved, index(i));
        }
        double row_right = 0.0;
        for (std::size_t j = t + 1; j < len; ++j) {
            row_right += dist(moved, index(j));
        }
        within_left += row_left;
        cross += row_right - row_left;
        within_right -= row_right;
    }
    return best;
}

}  // namespace detail

/// Generalized energy distance between the two clusters a split induces:
/// between-average minus the two within-averages. Left-to-right summation
/// order; may be negative in finite samples.
inline double energy_stat(const DistanceMatrix& dist, SegmentView seg, std::size_t split) {
    detail::check_segment(dist, seg);
    const std::size_t len = seg.length();
    if (split < 2 || len - split < 2) {
        throw DegenerateSplitError("split " + std::to_string(split) + " of segment length " +
                                   std::to_string(len) + " leaves a cluster smaller than 2");
    }
    const std::size_t mid = seg.start + split;
    double between = 0.0;
    for (std::size_t i = seg.start; i < mid; ++i) {
        for (std::size_t j = mid; j < seg.end; ++j) {
            between += dist(i, j);
        }
    }
    double within_left = 0.0;
    for (std::size_t i = seg.start; i < mid; ++i) {
        for (std::size_t j = i + 1; j < mid; ++j) {
            within_left += dist(i, j);
        }
    }
    double within_right = 0.0;
    for (std::size_t i = mid; i < seg.end; ++i) {
        for (std::size_t j = i + 1; j < seg.end; ++j) {
            within_right += dist(i, j);
        }
    }
    const double nl = static_cast<double>(split);
    const double nr = static_cast<double>(len - split);
    return 2.0 * between / (nl * nr) - 2.0 * within_left / (nl * (nl - 1.0)) -
           2.0 * within_right / (nr * (nr - 1.0));
}

/// Q statistic: the energy distance weighted by t(len-t)/len to balance
/// unequal cluster sizes. `len` is the segment's own length.
inline double q_stat(const DistanceMatrix& dist, SegmentView seg, std::size_t split) {
    const double energy = energy_stat(dist, seg, split);
    const double nl = static_cast<double>(split);
    const double nr = static_cast<double>(seg.length() - split);
    return nl * nr / (nl + nr) * energy;
}

/// The admissible split maximizing the Q statistic over `seg`; ties go to
/// the smallest split. Returns nullopt when the segment is too short for
/// any admissible split.
inline std::optional<SplitCandidate> best_split(const DistanceMatrix& dist,
                                                SegmentView seg,
                                                const EnergyParams& params) {
    detail::check_segment(dist, seg);
    validate(params);
    const std::size_t offset = seg.start;
    return detail::best_split_scan(dist, seg.length(), params.min_segment,
                                   [offset](std::size_t i) { return offset + i; });
}

}  // namespace ecpd
