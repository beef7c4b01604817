// Command-line front end: excess-mortality pipeline, change point
// detection, synthetic series generation, and plot-ready reports.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecpd/divisive.hpp"
#include "ecpd/excess_mortality.hpp"
#include "ecpd/io.hpp"
#include "ecpd/synthetic.hpp"
#include "ecpd/weeks.hpp"

namespace {

using namespace ecpd;

// Exit codes: 0 success, 2 usage/input, 3 degenerate data, 4 inconsistent inputs.
struct CliFailure {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CliFailure{2, "cannot open input file '" + path + "'"};
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CliFailure{2, "cannot open output file '" + path + "'"};
    }
    out << content;
}

std::set<int> parse_year_set(const std::string& text) {
    std::set<int> years;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto dash = item.find('-');
        if (dash != std::string::npos) {
            const auto lo = parse_long(std::string_view(item).substr(0, dash));
            const auto hi = parse_long(std::string_view(item).substr(dash + 1));
            if (!lo || !hi || *hi < *lo) {
                throw CliFailure{2, "bad year range '" + item + "'"};
            }
            for (long y = *lo; y <= *hi; ++y) years.insert(static_cast<int>(y));
        } else {
            const auto y = parse_long(item);
            if (!y) throw CliFailure{2, "bad year '" + item + "'"};
            years.insert(static_cast<int>(*y));
        }
    }
    if (years.empty()) {
        throw CliFailure{2, "empty baseline year set '" + text + "'"};
    }
    return years;
}

IsoWeek parse_week_flag(const std::string& text, const char* flag) {
    const auto week = IsoWeek::parse(text);
    if (!week) {
        throw CliFailure{2, std::string(flag) + " expects YYYY-Www, got '" + text + "'"};
    }
    return *week;
}

struct ExcessOptions {
    std::string input;
    std::string output;
    std::string baseline_years = "2015-2019";
    std::string start;
    std::string end;
    std::string country;
    bool allow_zero_median = false;
};

ExcessSeries load_excess_from_raw(const ExcessOptions& opts) {
    std::istringstream in(read_file(opts.input));
    ColumnMapping mapping;
    mapping.country_filter = opts.country;
    const ParsedDeaths parsed = parse_weekly_deaths(in, mapping);
    if (parsed.records.empty()) {
        throw CliFailure{2, "no usable records in '" + opts.input + "'"};
    }
    IsoWeek first{parsed.records.front().year, parsed.records.front().iso_week};
    IsoWeek last = first;
    for (const auto& record : parsed.records) {
        const IsoWeek week{record.year, record.iso_week};
        if (week < first) first = week;
        if (last < week) last = week;
    }
    const IsoWeek start = opts.start.empty() ? first : parse_week_flag(opts.start, "--start");
    const IsoWeek end = opts.end.empty() ? last : parse_week_flag(opts.end, "--end");
    const auto baseline = build_baseline(parsed.records, parse_year_set(opts.baseline_years));
    return compute_excess(parsed.records, baseline, start, end,
                          opts.allow_zero_median ? ZeroMedianPolicy::emit_missing
                                                 : ZeroMedianPolicy::error);
}

int cmd_excess(const ExcessOptions& opts) {
    const ExcessSeries excess = load_excess_from_raw(opts);
    std::ostringstream out;
    write_excess_csv(excess, out);
    write_output(opts.output, out.str());
    return 0;
}

struct DetectOptions {
    std::string input;
    std::string output;
    std::string format = "json";
    std::string grouping = "all";
    std::string start;
    std::string end;
    bool from_raw = false;
    ExcessOptions raw;  // baseline-years / country / zero-median for --from-raw
    double alpha = 1.0;
    std::size_t min_size = 2;
    std::size_t permutations = 499;
    double sig = 0.05;
    std::uint64_t seed = 0;
    std::int64_t max_points = 0;  // 0 = unlimited
};

DetectParams detect_params(const DetectOptions& opts) {
    DetectParams params;
    params.energy.alpha = opts.alpha;
    params.energy.min_segment = opts.min_size;
    params.permutations = opts.permutations;
    params.sig_level = opts.sig;
    params.seed = opts.seed;
    if (opts.max_points > 0) {
        params.max_points = static_cast<std::size_t>(opts.max_points);
    }
    return params;
}

std::string report_text(const ChangePointReport& report, const std::string& format) {
    if (format == "json") {
        return report_to_json(report).dump(2) + "\n";
    }
    std::ostringstream out;
    out << "index,label,q_value,p_value,iteration\n";
    for (const auto& detection : report.detections) {
        out << detection.index << ',' << detection.label << ','
            << format_double(detection.q_value) << ',' << format_double(detection.p_value)
            << ',' << detection.iteration << '\n';
    }
    return out.str();
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const std::filesystem::path p(path);
    std::filesystem::path renamed = p.parent_path();
    renamed /= p.stem().string() + "_" + suffix + p.extension().string();
    return renamed.string();
}

ChangePointReport run_detection(const MultiSeries& series, const DetectParams& params) {
    if (series.rows() < 2 * params.energy.min_segment) {
        throw CliFailure{3, "series too short: T = " + std::to_string(series.rows()) +
                                " needs at least " +
                                std::to_string(2 * params.energy.min_segment) +
                                " observations"};
    }
    return detect(series, params);
}

int cmd_detect(const DetectOptions& opts) {
    const DetectParams params = detect_params(opts);
    if (opts.format != "json" && opts.format != "csv") {
        throw CliFailure{2, "--format must be csv or json"};
    }

    std::optional<ExcessSeries> excess;
    std::optional<MultiSeries> matrix;
    if (opts.from_raw) {
        ExcessOptions raw = opts.raw;
        raw.input = opts.input;
        excess = load_excess_from_raw(raw);
    } else {
        const std::string content = read_file(opts.input);
        std::istringstream in(content);
        std::string header;
        std::getline(in, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        in.seekg(0);
        if (header.rfind("week_label,", 0) == 0) {
            excess = read_excess_csv(in);
        } else if (header.rfind("time,", 0) == 0) {
            matrix = read_matrix_csv(in);
        } else {
            throw CliFailure{2, "unrecognized input header '" + header + "'"};
        }
    }

    if (matrix) {
        if (!opts.start.empty() || !opts.end.empty() || opts.grouping != "all") {
            throw CliFailure{2, "--start/--end/--grouping apply to excess input only"};
        }
        const auto report = run_detection(*matrix, params);
        write_output(opts.output, report_text(report, opts.format));
        return 0;
    }

    const IsoWeek start =
        opts.start.empty() ? excess->weeks.front() : parse_week_flag(opts.start, "--start");
    std::optional<IsoWeek> end;
    if (!opts.end.empty()) end = parse_week_flag(opts.end, "--end");

    if (opts.grouping == "all" || opts.grouping == "totals") {
        const Grouping grouping =
            opts.grouping == "all" ? Grouping::all_groups : Grouping::totals_only;
        const auto series = build_detection_series(*excess, start, end, grouping);
        const auto report = run_detection(series, params);
        write_output(opts.output, report_text(report, opts.format));
        return 0;
    }
    if (opts.grouping != "per-age-group") {
        throw CliFailure{2, "--grouping must be all, per-age-group or totals"};
    }
    if (opts.output.empty() || opts.output == "-") {
        throw CliFailure{2, "--grouping per-age-group needs --output (one file per group)"};
    }
    for (const AgeGroup age : kAgeGroups) {
        const auto series =
            build_detection_series(*excess, start, end, Grouping::per_age_group, age);
        const auto report = run_detection(series, params);
        write_output(with_suffix(opts.output, std::string(age_group_token(age))),
                     report_text(report, opts.format));
    }
    return 0;
}

struct ReportOptions {
    std::string detection;
    std::string excess;
    std::string output;
};

int cmd_report(const ReportOptions& opts) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(read_file(opts.detection));
    } catch (const nlohmann::json::exception& e) {
        throw CliFailure{2, "cannot parse detection report: " + std::string(e.what())};
    }
    ChangePointReport report;
    try {
        report = report_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw CliFailure{2, "unexpected report schema: " + std::string(e.what())};
    }
    std::istringstream in(read_file(opts.excess));
    const ExcessSeries excess = read_excess_csv(in);

    // Rebuild the matrix the report was computed on; any disagreement
    // between the pair is an inconsistency (exit 4).
    try {
        const auto start = IsoWeek::parse(report.start_label);
        const auto end = IsoWeek::parse(report.end_label);
        if (!start || !end) {
            throw InvalidInputError("report labels are not week labels");
        }
        MultiSeries series;
        if (report.dim_labels == std::vector<std::string>{"total"}) {
            series = build_detection_series(excess, *start, end, Grouping::totals_only);
        } else if (report.dim_labels.size() == 2) {
            const auto age = age_group_from_token(
                std::string_view(report.dim_labels[0]).substr(2));
            if (!age) {
                throw InvalidInputError("unknown age group in report dimensions");
            }
            series =
                build_detection_series(excess, *start, end, Grouping::per_age_group, *age);
        } else {
            series = build_detection_series(excess, *start, end, Grouping::all_groups);
        }
        std::ostringstream out;
        write_tidy_csv(report, series, out);
        write_output(opts.output, out.str());
    } catch (const Error& e) {
        throw CliFailure{4, "detection report does not match the excess series: " +
                                std::string(e.what())};
    }
    return 0;
}

struct SimulateOptions {
    std::vector<std::string> segments;
    std::string output;
    std::string truth;
    std::uint64_t seed = 0;
};

SegmentSpec parse_segment(const std::string& text) {
    // length:mean[|mean...]:scale[:dist], dist = gaussian | t<dof>
    std::vector<std::string> parts;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) parts.push_back(item);
    if (parts.size() < 2 || parts.size() > 4) {
        throw CliFailure{2, "bad --segment '" + text + "' (want length:mean[|mean..][:scale[:dist]])"};
    }
    SegmentSpec spec;
    const auto length = parse_long(parts[0]);
    if (!length || *length < 1) {
        throw CliFailure{2, "bad segment length in '" + text + "'"};
    }
    spec.length = static_cast<std::size_t>(*length);
    std::istringstream means(parts[1]);
    while (std::getline(means, item, '|')) {
        const auto mean = parse_double(item);
        if (!mean) throw CliFailure{2, "bad segment mean in '" + text + "'"};
        spec.mean.push_back(*mean);
    }
    if (parts.size() >= 3) {
        const auto scale = parse_double(parts[2]);
        if (!scale || !(*scale > 0.0)) {
            throw CliFailure{2, "bad segment scale in '" + text + "'"};
        }
        spec.scale = *scale;
    }
    if (parts.size() == 4) {
        if (parts[3] == "gaussian") {
            spec.dist = SegmentSpec::Dist::gaussian;
        } else if (parts[3].size() > 1 && parts[3][0] == 't') {
            const auto dof = parse_long(std::string_view(parts[3]).substr(1));
            if (!dof || *dof < 3) {
                throw CliFailure{2, "bad heavy-tail dof in '" + text + "' (need t3 or higher)"};
            }
            spec.dist = SegmentSpec::Dist::heavy_tailed;
            spec.dof = static_cast<int>(*dof);
        } else {
            throw CliFailure{2, "bad segment distribution '" + parts[3] + "'"};
        }
    }
    return spec;
}

int cmd_simulate(const SimulateOptions& opts) {
    std::vector<SegmentSpec> specs;
    for (const auto& text : opts.segments) {
        specs.push_back(parse_segment(text));
    }
    const SyntheticTruth truth = generate(specs, opts.seed);
    std::ostringstream out;
    write_matrix_csv(truth.series, out);
    write_output(opts.output, out.str());

    nlohmann::ordered_json sidecar;
    sidecar["seed"] = opts.seed;
    sidecar["change_points"] = truth.change_points;
    const std::string truth_path =
        opts.truth.empty() ? opts.output + ".truth.json" : opts.truth;
    write_output(truth_path, sidecar.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-distance change point detection for weekly excess mortality"};
    app.require_subcommand(1);

    ExcessOptions excess_opts;
    auto* excess_cmd = app.add_subcommand(
        "excess", "Compute baseline medians and excess deaths from weekly counts");
    excess_cmd->add_option("--input", excess_opts.input, "weekly death counts CSV (STMF layout)")
        ->required();
    excess_cmd->add_option("--output", excess_opts.output, "excess CSV path (default stdout)");
    excess_cmd->add_option("--baseline-years", excess_opts.baseline_years,
                           "baseline years, e.g. 2015-2019 or 2015,2016");
    excess_cmd->add_option("--start", excess_opts.start, "first week label (YYYY-Www)");
    excess_cmd->add_option("--end", excess_opts.end, "last week label (YYYY-Www)");
    excess_cmd->add_option("--country", excess_opts.country,
                           "keep only rows with this country code");
    excess_cmd->add_flag("--allow-zero-median", excess_opts.allow_zero_median,
                         "emit missing rates instead of failing on zero medians");

    DetectOptions detect_opts;
    auto* detect_cmd =
        app.add_subcommand("detect", "Estimate distributional change points");
    detect_cmd->add_option("--input", detect_opts.input,
                           "excess CSV, matrix CSV, or raw counts with --from-raw")
        ->required();
    detect_cmd->add_option("--output", detect_opts.output, "report path (default stdout)");
    detect_cmd->add_option("--format", detect_opts.format, "report format: json or csv");
    detect_cmd->add_option("--grouping", detect_opts.grouping,
                           "columns: all, per-age-group or totals");
    detect_cmd->add_option("--start", detect_opts.start, "first week label");
    detect_cmd->add_option("--end", detect_opts.end, "last week label");
    detect_cmd->add_flag("--from-raw", detect_opts.from_raw,
                         "input is a raw weekly-counts file");
    detect_cmd->add_option("--baseline-years", detect_opts.raw.baseline_years,
                           "baseline years for --from-raw");
    detect_cmd->add_option("--country", detect_opts.raw.country,
                           "country filter for --from-raw");
    detect_cmd->add_option("--alpha", detect_opts.alpha,
                           "distance exponent in (0,2]; 2 = mean-difference mode");
    detect_cmd->add_option("--min-size", detect_opts.min_size, "minimum cluster length");
    detect_cmd->add_option("--permutations", detect_opts.permutations,
                           "permutation replicates R");
    detect_cmd->add_option("--sig", detect_opts.sig, "significance level");
    detect_cmd->add_option("--seed", detect_opts.seed, "permutation seed");
    detect_cmd->add_option("--max-points", detect_opts.max_points,
                           "stop after this many accepted points (0 = unlimited)");

    SimulateOptions sim_opts;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Generate a piecewise series with known change points");
    sim_cmd->add_option("--segment", sim_opts.segments,
                        "segment spec length:mean[|mean..][:scale[:dist]]; repeatable")
        ->required();
    sim_cmd->add_option("--output", sim_opts.output, "matrix CSV path")->required();
    sim_cmd->add_option("--truth", sim_opts.truth,
                        "truth sidecar path (default <output>.truth.json)");
    sim_cmd->add_option("--seed", sim_opts.seed, "generator seed");

    ReportOptions report_opts;
    auto* report_cmd = app.add_subcommand(
        "report", "Join a detection report with its excess series for plotting");
    report_cmd->add_option("--detection", report_opts.detection, "detection report JSON")
        ->required();
    report_cmd->add_option("--excess", report_opts.excess, "excess CSV the report was run on")
        ->required();
    report_cmd->add_option("--output", report_opts.output, "tidy CSV path (default stdout)");

    try {
        app.parse(argc, argv);
        if (excess_cmd->parsed()) return cmd_excess(excess_opts);
        if (detect_cmd->parsed()) return cmd_detect(detect_opts);
        if (sim_cmd->parsed()) return cmd_simulate(sim_opts);
        if (report_cmd->parsed()) return cmd_report(report_opts);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const CliFailure& failure) {
        std::cerr << "error: " << failure.message << "\n";
        return failure.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}
