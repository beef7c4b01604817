#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecpd/energy.hpp"
#include "ecpd/errors.hpp"
#include "ecpd/rng.hpp"
#include "ecpd/series.hpp"

namespace ecpd {

/// One homogeneous stretch of a generated series.
struct SegmentSpec {
    enum class Dist { gaussian, heavy_tailed };

    std::size_t length = 0;
    std::vector<double> mean;  ///< one entry per dimension
    double scale = 1.0;
    Dist dist = Dist::gaussian;
    int dof = 3;  ///< heavy_tailed only; kept >= 3 so E|Z|^alpha stays finite
};

/// A generated series together with its true change points (1-based
/// cumulative segment boundaries).
struct SyntheticTruth {
    MultiSeries series;
    std::vector<std::size_t> change_points;
};

/// Concatenated independent draws per spec; deterministic given seed.
inline SyntheticTruth generate(std::span<const SegmentSpec> specs, std::uint64_t seed) {
    if (specs.empty()) {
        throw InvalidInputError("need at least one segment spec");
    }
    const std::size_t d = specs.front().mean.size();
    std::size_t total = 0;
    for (const auto& spec : specs) {
        if (spec.mean.size() != d) {
            throw InvalidInputError("segment specs disagree on dimension");
        }
        if (spec.length < 1 || !(spec.scale > 0.0)) {
            throw InvalidInputError("segment needs length >= 1 and scale > 0");
        }
        if (spec.dist == SegmentSpec::Dist::heavy_tailed && spec.dof < 3) {
            throw InvalidInputError("heavy-tailed segments need dof >= 3");
        }
        total += spec.length;
    }

    SyntheticTruth out;
    out.series.dim = d;
    out.series.values.reserve(total * d);
    Rng rng(substream_seed(seed, 0));
    for (const auto& spec : specs) {
        for (std::size_t t = 0; t < spec.length; ++t) {
            for (std::size_t j = 0; j < d; ++j) {
                double draw = rng.normal();
                if (spec.dist == SegmentSpec::Dist::heavy_tailed) {
                    double chi_sq = 0.0;
                    for (int k = 0; k < spec.dof; ++k) {
                        const double z = rng.normal();
                        chi_sq += z * z;
                    }
                    draw /= std::sqrt(chi_sq / static_cast<double>(spec.dof));
                }
                out.series.values.push_back(spec.mean[j] + spec.scale * draw);
            }
        }
    }
    out.series.time_labels.reserve(total);
    for (std::size_t t = 1; t <= total; ++t) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "t%06zu", t);
        out.series.time_labels.emplace_back(buf);
    }
    for (std::size_t j = 0; j < d; ++j) {
        out.series.dim_labels.push_back("x" + std::to_string(j));
    }
    std::size_t boundary = 0;
    for (std::size_t s = 0; s + 1 < specs.size(); ++s) {
        boundary += specs[s].length;
        out.change_points.push_back(boundary);
    }
    return out;
}

/// Test oracle: the Q-maximizing split found by direct triple-sum
/// evaluation of the energy distance at every admissible split. Shares no
/// arithmetic with the energy module — distances are recomputed here from
/// the raw rows.
inline std::optional<SplitCandidate> brute_force_best_split(const MultiSeries& series,
                                                            double alpha,
                                                            std::size_t min_segment) {
    validate(series);
    const std::size_t n = series.rows();
    const std::size_t d = series.dim;
    if (n < 2 * min_segment) return std::nullopt;

    const auto pair_dist = [&](std::size_t i, std::size_t j) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = series.at(i, k) - series.at(j, k);
            sq += diff * diff;
        }
        return std::pow(std::sqrt(sq), alpha);
    };

    std::optional<SplitCandidate> best;
    for (std::size_t t = min_segment; t <= n - min_segment; ++t) {
        double between = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = t; j < n; ++j) {
                between += pair_dist(i, j);
            }
        }
        double within_left = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = i + 1; j < t; ++j) {
                within_left += pair_dist(i, j);
            }
        }
        double within_right = 0.0;
        for (std::size_t i = t; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                within_right += pair_dist(i, j);
            }
        }
        const double nl = static_cast<double>(t);
        const double nr = static_cast<double>(n - t);
        const double energy = 2.0 * between / (nl * nr) -
                              within_left / (nl * (nl - 1.0) / 2.0) -
                              within_right / (nr * (nr - 1.0) / 2.0);
        const double q = nl * nr / (nl + nr) * energy;
        if (!best || q > best->q_value) {
            best = SplitCandidate{t, q};
        }
    }
    return best;
}

}  // namespace ecpd
