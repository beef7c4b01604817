#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecpd/csv.hpp"
#include "ecpd/divisive.hpp"
#include "ecpd/errors.hpp"
#include "ecpd/series.hpp"

namespace ecpd {

/// Plain matrix form of the detector's input: a `time` column of labels
/// followed by one column per dimension.
inline void write_matrix_csv(const MultiSeries& series, std::ostream& out) {
    out << "time";
    for (const auto& label : series.dim_labels) {
        out << ',' << label;
    }
    out << '\n';
    for (std::size_t t = 0; t < series.rows(); ++t) {
        out << series.time_labels[t];
        for (std::size_t j = 0; j < series.dim; ++j) {
            out << ',' << format_double(series.at(t, j));
        }
        out << '\n';
    }
}

inline MultiSeries read_matrix_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(1, "empty matrix CSV");
    }
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "time") {
        throw ParseError(1, "expected header 'time,<dim>,...'");
    }
    MultiSeries series;
    series.dim = header.size() - 1;
    series.dim_labels.assign(header.begin() + 1, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                          " fields, got " + std::to_string(fields.size()));
        }
        series.time_labels.push_back(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            const auto value = parse_double(fields[j]);
            if (!value) {
                throw ParseError(line_no, "bad value '" + fields[j] + "'");
            }
            series.values.push_back(*value);
        }
    }
    validate(series);
    return series;
}

/// JSON form of a detection report. Indices are 1-based and cluster /
/// segment bounds inclusive, matching the report conventions; parsing the
/// produced JSON and re-serializing is value-identical.
inline nlohmann::ordered_json report_to_json(const ChangePointReport& report) {
    nlohmann::ordered_json j;
    auto& params = j["params"];
    params["alpha"] = report.params.energy.alpha;
    params["alpha_mode"] =
        report.params.energy.alpha == 2.0 ? "mean_difference" : "energy";
    params["min_segment"] = report.params.energy.min_segment;
    params["permutations"] = report.params.permutations;
    params["sig_level"] = report.params.sig_level;
    params["seed"] = report.params.seed;
    if (report.params.max_points) {
        params["max_points"] = *report.params.max_points;
    } else {
        params["max_points"] = nullptr;
    }
    j["num_observations"] = report.num_observations;
    j["dim"] = report.dim;
    j["start_label"] = report.start_label;
    j["end_label"] = report.end_label;
    j["dim_labels"] = report.dim_labels;
    j["detections"] = nlohmann::ordered_json::array();
    for (const auto& detection : report.detections) {
        nlohmann::ordered_json d;
        d["index"] = detection.index;
        d["label"] = detection.label;
        d["q_value"] = detection.q_value;
        d["p_value"] = detection.p_value;
        d["iteration"] = detection.iteration;
        d["segment"] = {{"start", detection.segment.start + 1}, {"end", detection.segment.end}};
        j["detections"].push_back(std::move(d));
    }
    j["change_points"] = report.change_points;
    j["change_point_labels"] = report.change_point_labels;
    j["clusters"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.clusters.size(); ++c) {
        j["clusters"].push_back({{"id", c + 1},
                                 {"start", report.clusters[c].start + 1},
                                 {"end", report.clusters[c].end}});
    }
    return j;
}

inline ChangePointReport report_from_json(const nlohmann::ordered_json& j) {
    ChangePointReport report;
    const auto& params = j.at("params");
    report.params.energy.alpha = params.at("alpha").get<double>();
    report.params.energy.min_segment = params.at("min_segment").get<std::size_t>();
    report.params.permutations = params.at("permutations").get<std::size_t>();
    report.params.sig_level = params.at("sig_level").get<double>();
    report.params.seed = params.at("seed").get<std::uint64_t>();
    if (!params.at("max_points").is_null()) {
        report.params.max_points = params.at("max_points").get<std::size_t>();
    }
    report.num_observations = j.at("num_observations").get<std::size_t>();
    report.dim = j.at("dim").get<std::size_t>();
    report.start_label = j.at("start_label").get<std::string>();
    report.end_label = j.at("end_label").get<std::string>();
    report.dim_labels = j.at("dim_labels").get<std::vector<std::string>>();
    for (const auto& d : j.at("detections")) {
        Detection detection;
        detection.index = d.at("index").get<std::size_t>();
        detection.label = d.at("label").get<std::string>();
        detection.q_value = d.at("q_value").get<double>();
        detection.p_value = d.at("p_value").get<double>();
        detection.iteration = d.at("iteration").get<std::size_t>();
        detection.segment.start = d.at("segment").at("start").get<std::size_t>() - 1;
        detection.segment.end = d.at("segment").at("end").get<std::size_t>();
        report.detections.push_back(std::move(detection));
    }
    report.change_points = j.at("change_points").get<std::vector<std::size_t>>();
    report.change_point_labels =
        j.at("change_point_labels").get<std::vector<std::string>>();
    for (const auto& c : j.at("clusters")) {
        report.clusters.push_back(
            {c.at("start").get<std::size_t>() - 1, c.at("end").get<std::size_t>()});
    }
    return report;
}

/// Plot-ready long-form table: one (week, group, rate, cluster_id) row per
/// observation and dimension. `series` must be the matrix the report was
/// computed on; throws InvalidInputError when the pair does not match.
inline void write_tidy_csv(const ChangePointReport& report,
                           const MultiSeries& series,
                           std::ostream& out) {
    if (series.rows() != report.num_observations || series.dim != report.dim ||
        series.time_labels.front() != report.start_label ||
        series.time_labels.back() != report.end_label ||
        series.dim_labels != report.dim_labels) {
        throw InvalidInputError("series does not match the detection report");
    }
    std::vector<std::size_t> cluster_of(series.rows());
    for (std::size_t c = 0; c < report.clusters.size(); ++c) {
        for (std::size_t t = report.clusters[c].start; t < report.clusters[c].end; ++t) {
            cluster_of[t] = c + 1;
        }
    }
    out << "week,group,rate,cluster_id\n";
    for (std::size_t t = 0; t < series.rows(); ++t) {
        for (std::size_t j = 0; j < series.dim; ++j) {
            out << series.time_labels[t] << ',' << series.dim_labels[j] << ','
                << format_double(series.at(t, j)) << ',' << cluster_of[t] << '\n';
        }
    }
}

}  // namespace ecpd
