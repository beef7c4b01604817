#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ecpd/energy.hpp"
#include "ecpd/errors.hpp"
#include "ecpd/rng.hpp"
#include "ecpd/series.hpp"

namespace ecpd {

/// Parameters of the divisive detection loop.
struct DetectParams {
    EnergyParams energy;
    std::size_t permutations = 499;  ///< replicates R of the significance test
    double sig_level = 0.05;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_points;  ///< cap on accepted points; unlimited if absent
};

inline void validate(const DetectParams& params) {
    validate(params.energy);
    if (params.permutations < 1) {
        throw InvalidInputError("permutations must be >= 1");
    }
    if (!(params.sig_level > 0.0) || !(params.sig_level < 1.0)) {
        throw InvalidInputError("sig_level must be in (0, 1), got " +
                                std::to_string(params.sig_level));
    }
    if (params.max_points && *params.max_points < 1) {
        throw InvalidInputError("max_points must be >= 1 when set");
    }
}

/// One accepted change point, in discovery order.
struct Detection {
    std::size_t index = 0;   ///< global 1-based index of the left cluster's last observation
    std::string label;       ///< time label at that index
    double q_value = 0.0;
    double p_value = 0.0;
    std::size_t iteration = 0;
    SegmentView segment;     ///< the cluster that was split (0-based half-open)
};

/// Full result of detect(): points in discovery and in sorted order, the
/// final cluster partition, and an echo of the inputs.
struct ChangePointReport {
    DetectParams params;
    std::size_t num_observations = 0;
    std::size_t dim = 0;
    std::string start_label;
    std::string end_label;
    std::vector<std::string> dim_labels;
    std::vector<Detection> detections;        ///< discovery order
    std::vector<std::size_t> change_points;   ///< same points, ascending
    std::vector<std::string> change_point_labels;
    std::vector<SegmentView> clusters;        ///< contiguous cover of [0, T)
};

/// Clusters induced by 1-based change points: boundaries at the points,
/// contiguous cover of [0, T).
inline std::vector<SegmentView> assign_clusters(std::size_t t_count,
                                                const std::vector<std::size_t>& change_points) {
    std::vector<SegmentView> clusters;
    std::size_t prev = 0;
    for (const std::size_t point : change_points) {
        if (point <= prev || point >= t_count) {
            throw InvalidInputError("change points must be strictly increasing inside [1, T-1]; "
                                    "got " + std::to_string(point) + " with T = " +
                                    std::to_string(t_count));
        }
        clusters.push_back({prev, point});
        prev = point;
    }
    clusters.push_back({prev, t_count});
    return clusters;
}

namespace detail {

struct GlobalCandidate {
    std::size_t cluster_pos = 0;   ///< index into the cluster list
    std::size_t global_split = 0;  ///< seg.start + local split
    double q_value = 0.0;
};

/// Best candidate over all current clusters; tie on Q goes to the smallest
/// global split index.
inline std::optional<GlobalCandidate> best_global_candidate(
    const DistanceMatrix& dist,
    const std::vector<SegmentView>& clusters,
    const EnergyParams& params) {
    std::optional<GlobalCandidate> best;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto cand = best_split(dist, clusters[c], params);
        if (!cand) continue;
        const std::size_t global_split = clusters[c].start + cand->split;
        if (!best || cand->q_value > best->q_value ||
            (cand->q_value == best->q_value && global_split < best->global_split)) {
            best = GlobalCandidate{c, global_split, cand->q_value};
        }
    }
    return best;
}

}  // namespace detail

/// Significance of the best split given the current partition. Each
/// replicate independently permutes the observations within every cluster
/// (never across), re-runs the split search over all clusters through
/// permuted index lookups into `dist`, and counts max-Q exceedances:
///     p = (1 + #{r : Q_r >= observed_q}) / (R + 1).
/// Replicate r draws only from substream (stream_seed, r), so the count is
/// order-independent and the result deterministic.
inline double permutation_pvalue(const DistanceMatrix& dist,
                                 const std::vector<SegmentView>& clusters,
                                 double observed_q,
                                 const DetectParams& params,
                                 std::uint64_t stream_seed) {
    validate(params);
    std::vector<std::vector<std::uint32_t>> scratch(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        scratch[c].resize(clusters[c].length());
    }

    std::size_t exceed = 0;
    for (std::size_t r = 0; r < params.permutations; ++r) {
        Rng rng(substream_seed(stream_seed, r));
        double max_q = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            auto& idx = scratch[c];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                idx[i] = static_cast<std::uint32_t>(clusters[c].start + i);
            }
            rng.shuffle(std::span<std::uint32_t>(idx));
            const auto cand = detail::best_split_scan(
                dist, idx.size(), params.energy.min_segment,
                [&idx](std::size_t i) { return idx[i]; });
            if (cand && (!any || cand->q_value > max_q)) {
                max_q = cand->q_value;
                any = true;
            }
        }
        if (any && max_q >= observed_q) ++exceed;
    }
    return (1.0 + static_cast<double>(exceed)) /
           (static_cast<double>(params.permutations) + 1.0);
}

/// Hierarchical divisive estimation: start from one cluster, repeatedly
/// split at the globally best Q, accept the split only while the
/// permutation test deems it significant.
inline ChangePointReport detect(const MultiSeries& series, const DetectParams& params) {
    validate(series);
    validate(params);
    const std::size_t t_count = series.rows();

    ChangePointReport report;
    report.params = params;
    report.num_observations = t_count;
    report.dim = series.dim;
    report.start_label = series.time_labels.front();
    report.end_label = series.time_labels.back();
    report.dim_labels = series.dim_labels;

    const DistanceMatrix dist = alpha_distance_matrix(series, params.energy.alpha);
    std::vector<SegmentView> clusters{{0, t_count}};

    for (std::size_t iteration = 1;; ++iteration) {
        if (params.max_points && report.detections.size() >= *params.max_points) break;
        const auto cand = detail::best_global_candidate(dist, clusters, params.energy);
        if (!cand) break;
        const double p = permutation_pvalue(dist, clusters, cand->q_value, params,
                                            substream_seed(params.seed, iteration));
        if (p > params.sig_level) break;

        const SegmentView split_seg = clusters[cand->cluster_pos];
        report.detections.push_back({cand->global_split,
                                     series.time_labels[cand->global_split - 1],
                                     cand->q_value, p, iteration, split_seg});
        clusters[cand->cluster_pos] = {split_seg.start, cand->global_split};
        clusters.insert(clusters.begin() + static_cast<std::ptrdiff_t>(cand->cluster_pos) + 1,
                        {cand->global_split, split_seg.end});
    }

    for (const auto& detection : report.detections) {
        report.change_points.push_back(detection.index);
    }
    std::sort(report.change_points.begin(), report.change_points.end());
    for (const std::size_t point : report.change_points) {
        report.change_point_labels.push_back(series.time_labels[point - 1]);
    }
    report.clusters = assign_clusters(t_count, report.change_points);
    return report;
}

}  // namespace ecpd
