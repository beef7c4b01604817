#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ecpd/csv.hpp"
#include "ecpd/errors.hpp"
#include "ecpd/series.hpp"
#include "ecpd/weeks.hpp"

namespace ecpd {

enum class Sex { female, male };

enum class AgeGroup { a0_14, a15_64, a65_74, a75_84, a85p };

inline constexpr std::array<AgeGroup, 5> kAgeGroups = {
    AgeGroup::a0_14, AgeGroup::a15_64, AgeGroup::a65_74, AgeGroup::a75_84, AgeGroup::a85p};

inline constexpr std::size_t kNumGroups = 10;  // 2 sexes x 5 age groups

inline std::string_view sex_code(Sex sex) {
    return sex == Sex::female ? "f" : "m";
}

inline std::string_view age_group_name(AgeGroup age) {
    switch (age) {
        case AgeGroup::a0_14: return "0-14";
        case AgeGroup::a15_64: return "15-64";
        case AgeGroup::a65_74: return "65-74";
        case AgeGroup::a75_84: return "75-84";
        case AgeGroup::a85p: return "85+";
    }
    return "?";
}

/// Identifier-safe age token, used in dimension labels and file names.
inline std::string_view age_group_token(AgeGroup age) {
    switch (age) {
        case AgeGroup::a0_14: return "0_14";
        case AgeGroup::a15_64: return "15_64";
        case AgeGroup::a65_74: return "65_74";
        case AgeGroup::a75_84: return "75_84";
        case AgeGroup::a85p: return "85p";
    }
    return "?";
}

inline std::optional<AgeGroup> age_group_from_token(std::string_view token) {
    for (const AgeGroup age : kAgeGroups) {
        if (token == age_group_token(age) || token == age_group_name(age)) return age;
    }
    return std::nullopt;
}

/// Column position in the detector's d=10 matrix: females by ascending
/// age, then males by ascending age.
inline std::size_t group_index(Sex sex, AgeGroup age) {
    return (sex == Sex::female ? 0 : 5) + static_cast<std::size_t>(age);
}

inline Sex group_sex(std::size_t index) {
    return index < 5 ? Sex::female : Sex::male;
}

inline AgeGroup group_age(std::size_t index) {
    return kAgeGroups[index % 5];
}

inline std::string group_dim_label(std::size_t index) {
    return std::string(sex_code(group_sex(index))) + "_" +
           std::string(age_group_token(group_age(index)));
}

/// One parsed weekly death count. Counts may be fractional (split counts
/// appear in source data).
struct WeeklyDeathRecord {
    int year = 0;
    int iso_week = 0;
    Sex sex = Sex::female;
    AgeGroup age_group = AgeGroup::a0_14;
    double deaths = 0.0;
};

/// Names of the input columns; defaults follow the STMF layout.
struct ColumnMapping {
    std::string year = "Year";
    std::string week = "Week";
    std::string sex = "Sex";
    std::array<std::string, 5> deaths = {"D0_14", "D15_64", "D65_74", "D75_84", "D85p"};
    std::string country;         ///< column name, used only when country_filter is set
    std::string country_filter;  ///< keep only rows with this code; empty = keep all
};

struct SkippedRow {
    std::size_t line = 0;
    std::string reason;
};

struct ParsedDeaths {
    std::vector<WeeklyDeathRecord> records;
    std::vector<SkippedRow> skipped;  ///< rows outside the mapping, with line numbers
};

/// Reads a delimited table of weekly death counts, one record per
/// (row, age group). Sex codes f/m are kept, b (both) is skipped, anything
/// else is recorded as skipped. Malformed cells throw ParseError with the
/// line number; a repeated (year, week, sex) key throws DuplicateDataError.
inline ParsedDeaths parse_weekly_deaths(std::istream& in,
                                        const ColumnMapping& mapping = {},
                                        char delim = ',') {
    ParsedDeaths out;
    std::string line;
    if (!std::getline(in, line)) {
        return out;  // empty input, empty result
    }
    const std::vector<std::string> header = split_csv_line(line, delim);
    const auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError(1, "missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t year_col = column(mapping.year);
    const std::size_t week_col = column(mapping.week);
    const std::size_t sex_col = column(mapping.sex);
    std::array<std::size_t, 5> death_cols{};
    for (std::size_t g = 0; g < 5; ++g) {
        death_cols[g] = column(mapping.deaths[g]);
    }
    std::size_t country_col = 0;
    const bool filter_country = !mapping.country_filter.empty();
    if (filter_country) {
        country_col = column(mapping.country.empty() ? std::string("CountryCode")
                                                     : mapping.country);
    }
    std::size_t max_col = std::max({year_col, week_col, sex_col});
    for (const std::size_t c : death_cols) max_col = std::max(max_col, c);
    if (filter_country) max_col = std::max(max_col, country_col);

    std::set<std::tuple<int, int, Sex>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line, delim);
        if (fields.size() <= max_col) {
            throw ParseError(line_no, "expected at least " + std::to_string(max_col + 1) +
                                          " fields, got " + std::to_string(fields.size()));
        }
        if (filter_country && fields[country_col] != mapping.country_filter) {
            out.skipped.push_back({line_no, "country '" + fields[country_col] + "' not selected"});
            continue;
        }
        const std::string& sex_field = fields[sex_col];
        Sex sex;
        if (sex_field == "f") {
            sex = Sex::female;
        } else if (sex_field == "m") {
            sex = Sex::male;
        } else if (sex_field == "b") {
            out.skipped.push_back({line_no, "both-sex row ignored"});
            continue;
        } else {
            out.skipped.push_back({line_no, "unknown sex code '" + sex_field + "'"});
            continue;
        }
        const auto year = parse_long(fields[year_col]);
        if (!year || *year < 1) {
            throw ParseError(line_no, "bad year '" + fields[year_col] + "'");
        }
        const auto week = parse_long(fields[week_col]);
        if (!week) {
            throw ParseError(line_no, "bad week '" + fields[week_col] + "'");
        }
        const int weeks_in_year = iso_weeks_in_year(static_cast<int>(*year));
        if (*week < 1 || *week > weeks_in_year) {
            throw ParseError(line_no, "week " + std::to_string(*week) + " invalid for year " +
                                          std::to_string(*year) + " (has " +
                                          std::to_string(weeks_in_year) + " ISO weeks)");
        }
        if (!seen.insert({static_cast<int>(*year), static_cast<int>(*week), sex}).second) {
            throw DuplicateDataError("line " + std::to_string(line_no) + ": duplicate row for " +
                                     std::to_string(*year) + "-W" + std::to_string(*week) +
                                     " sex " + std::string(sex_code(sex)));
        }
        for (std::size_t g = 0; g < 5; ++g) {
            const auto deaths = parse_double(fields[death_cols[g]]);
            if (!deaths || !std::isfinite(*deaths) || *deaths < 0.0) {
                throw ParseError(line_no, "bad death count '" + fields[death_cols[g]] +
                                              "' in column '" + mapping.deaths[g] + "'");
            }
            out.records.push_back({static_cast<int>(*year), static_cast<int>(*week), sex,
                                   kAgeGroups[g], *deaths});
        }
    }
    return out;
}

/// Week-of-year median death counts per (sex, age group) over a set of
/// baseline years. Week 53 is served by the week-52 cell, since most years
/// lack a week 53.
class BaselineTable {
public:
    BaselineTable() = default;
    BaselineTable(std::set<int> years, std::array<std::array<double, 52>, kNumGroups> cells)
        : years_(std::move(years)), cells_(cells) {}

    const std::set<int>& years() const { return years_; }

    double median_for(Sex sex, AgeGroup age, int week_of_year) const {
        const int week = week_of_year > 52 ? 52 : week_of_year;
        return cells_[group_index(sex, age)][static_cast<std::size_t>(week - 1)];
    }

private:
    std::set<int> years_;
    std::array<std::array<double, 52>, kNumGroups> cells_{};
};

/// Median of a non-empty vector; midpoint of the central pair when the
/// count is even. Sorts in place.
inline double median_inplace(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline BaselineTable build_baseline(std::span<const WeeklyDeathRecord> records,
                                    const std::set<int>& baseline_years) {
    if (baseline_years.empty()) {
        throw InvalidInputError("baseline year set is empty");
    }
    std::array<std::array<std::vector<double>, 52>, kNumGroups> counts;
    for (const auto& record : records) {
        if (!baseline_years.contains(record.year) || record.iso_week > 52) continue;
        counts[group_index(record.sex, record.age_group)]
              [static_cast<std::size_t>(record.iso_week - 1)]
            .push_back(record.deaths);
    }
    std::array<std::array<double, 52>, kNumGroups> cells{};
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        for (std::size_t w = 0; w < 52; ++w) {
            auto& values = counts[g][w];
            if (values.empty()) {
                throw MissingBaselineError(
                    "no baseline observations for sex " +
                    std::string(sex_code(group_sex(g))) + ", age " +
                    std::string(age_group_name(group_age(g))) + ", week " +
                    std::to_string(w + 1));
            }
            cells[g][w] = median_inplace(values);
        }
    }
    return BaselineTable(baseline_years, cells);
}

/// actual / median / excess / rate for one group-week. rate is absent when
/// the median is zero and the null-rate policy is in effect.
struct ExcessCell {
    double actual = 0.0;
    double median = 0.0;
    double excess = 0.0;
    std::optional<double> rate;
};

enum class ZeroMedianPolicy { error, emit_missing };

/// The derived baseline/excess/rate table over a contiguous week span:
/// ten group cells plus a totals cell per week.
struct ExcessSeries {
    std::vector<IsoWeek> weeks;  ///< chronological, no gaps
    std::vector<std::array<ExcessCell, kNumGroups>> groups;
    std::vector<ExcessCell> totals;

    std::optional<std::size_t> week_pos(IsoWeek week) const {
        const auto it = std::lower_bound(weeks.begin(), weeks.end(), week);
        if (it == weeks.end() || *it != week) return std::nullopt;
        return static_cast<std::size_t>(it - weeks.begin());
    }
};

inline ExcessSeries compute_excess(std::span<const WeeklyDeathRecord> records,
                                   const BaselineTable& baseline,
                                   IsoWeek start,
                                   IsoWeek end,
                                   ZeroMedianPolicy policy = ZeroMedianPolicy::error) {
    if (!start.valid() || !end.valid() || end < start) {
        throw InvalidSpanError("bad week span " + start.str() + " .. " + end.str());
    }
    std::map<std::tuple<int, int, std::size_t>, double> actuals;
    for (const auto& record : records) {
        actuals[{record.year, record.iso_week, group_index(record.sex, record.age_group)}] =
            record.deaths;
    }

    const auto rate_of = [policy](double excess, double median,
                                  const std::string& where) -> std::optional<double> {
        if (median > 0.0) return excess / median;
        if (policy == ZeroMedianPolicy::error) {
            throw ZeroMedianError("median is zero for " + where);
        }
        return std::nullopt;
    };

    ExcessSeries out;
    for (IsoWeek week = start;; week = week.next()) {
        std::array<ExcessCell, kNumGroups> row;
        ExcessCell total;
        for (std::size_t g = 0; g < kNumGroups; ++g) {
            const auto it = actuals.find({week.year, week.week, g});
            if (it == actuals.end()) {
                throw InvalidSpanError("no record for " + week.str() + " sex " +
                                       std::string(sex_code(group_sex(g))) + ", age " +
                                       std::string(age_group_name(group_age(g))));
            }
            ExcessCell& cell = row[g];
            cell.actual = it->second;
            cell.median = baseline.median_for(group_sex(g), group_age(g), week.week);
            cell.excess = cell.actual - cell.median;
            cell.rate = rate_of(cell.excess, cell.median,
                                week.str() + " " + std::string(sex_code(group_sex(g))) + " " +
                                    std::string(age_group_name(group_age(g))));
            total.actual += cell.actual;
            total.median += cell.median;
            total.excess += cell.excess;
        }
        total.rate = rate_of(total.excess, total.median, week.str() + " total");
        out.weeks.push_back(week);
        out.groups.push_back(row);
        out.totals.push_back(total);
        if (week == end) break;
    }
    return out;
}

enum class Grouping { all_groups, per_age_group, totals_only };

/// Rate matrix fed to the detector. all_groups: d=10 columns in group
/// order; per_age_group: the (female, male) pair of one age group;
/// totals_only: the single total-rate column.
inline MultiSeries build_detection_series(const ExcessSeries& excess,
                                          IsoWeek start,
                                          std::optional<IsoWeek> end = std::nullopt,
                                          Grouping grouping = Grouping::all_groups,
                                          std::optional<AgeGroup> age_group = std::nullopt) {
    if (excess.weeks.empty()) {
        throw InvalidSpanError("excess series is empty");
    }
    const IsoWeek last = end.value_or(excess.weeks.back());
    const auto start_pos = excess.week_pos(start);
    const auto end_pos = excess.week_pos(last);
    if (!start_pos || !end_pos || *end_pos < *start_pos) {
        throw InvalidSpanError("span " + start.str() + " .. " + last.str() +
                               " not covered by the excess series");
    }
    if (grouping == Grouping::per_age_group && !age_group) {
        throw InvalidInputError("per_age_group grouping needs an age group");
    }

    std::vector<std::size_t> cols;  // group indices; kNumGroups marks the totals column
    MultiSeries series;
    switch (grouping) {
        case Grouping::all_groups:
            for (std::size_t g = 0; g < kNumGroups; ++g) {
                cols.push_back(g);
                series.dim_labels.push_back(group_dim_label(g));
            }
            break;
        case Grouping::per_age_group:
            for (const Sex sex : {Sex::female, Sex::male}) {
                cols.push_back(group_index(sex, *age_group));
                series.dim_labels.push_back(group_dim_label(cols.back()));
            }
            break;
        case Grouping::totals_only:
            cols.push_back(kNumGroups);
            series.dim_labels.emplace_back("total");
            break;
    }

    series.dim = cols.size();
    for (std::size_t pos = *start_pos; pos <= *end_pos; ++pos) {
        series.time_labels.push_back(excess.weeks[pos].str());
        for (const std::size_t g : cols) {
            const ExcessCell& cell =
                g == kNumGroups ? excess.totals[pos] : excess.groups[pos][g];
            if (!cell.rate) {
                throw InvalidInputError("excess rate missing (zero median) at " +
                                        excess.weeks[pos].str() +
                                        "; cannot build a detection series");
            }
            series.values.push_back(*cell.rate);
        }
    }
    validate(series);
    return series;
}

inline constexpr std::string_view kExcessCsvHeader =
    "week_label,sex,age_group,actual,median,excess,rate";

/// Writes the excess table: per week, ten group rows in group order, then
/// a totals row (sex and age_group "all"). Numbers use shortest
/// round-trip formatting, so write -> read -> write is byte-stable.
inline void write_excess_csv(const ExcessSeries& excess, std::ostream& out) {
    out << kExcessCsvHeader << '\n';
    const auto write_cell = [&out](const std::string& week, std::string_view sex,
                                   std::string_view age, const ExcessCell& cell) {
        out << week << ',' << sex << ',' << age << ',' << format_double(cell.actual) << ','
            << format_double(cell.median) << ',' << format_double(cell.excess) << ',';
        if (cell.rate) out << format_double(*cell.rate);
        out << '\n';
    };
    for (std::size_t pos = 0; pos < excess.weeks.size(); ++pos) {
        const std::string week = excess.weeks[pos].str();
        for (std::size_t g = 0; g < kNumGroups; ++g) {
            write_cell(week, sex_code(group_sex(g)), age_group_name(group_age(g)),
                       excess.groups[pos][g]);
        }
        write_cell(week, "all", "all", excess.totals[pos]);
    }
}

/// Reads a table produced by write_excess_csv. Expects the exact column
/// set and the writer's row order; weeks must be contiguous.
inline ExcessSeries read_excess_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(1, "empty excess CSV");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kExcessCsvHeader) {
        throw ParseError(1, "unexpected header '" + line + "'");
    }
    ExcessSeries out;
    std::size_t line_no = 1;
    std::array<ExcessCell, kNumGroups> row;
    std::size_t filled = 0;
    std::optional<IsoWeek> current;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 7) {
            throw ParseError(line_no, "expected 7 fields, got " + std::to_string(fields.size()));
        }
        const auto week = IsoWeek::parse(fields[0]);
        if (!week) {
            throw ParseError(line_no, "bad week label '" + fields[0] + "'");
        }
        ExcessCell cell;
        const auto actual = parse_double(fields[3]);
        const auto median = parse_double(fields[4]);
        const auto excess_value = parse_double(fields[5]);
        if (!actual || !median || !excess_value) {
            throw ParseError(line_no, "bad numeric field");
        }
        cell.actual = *actual;
        cell.median = *median;
        cell.excess = *excess_value;
        if (!fields[6].empty()) {
            const auto rate = parse_double(fields[6]);
            if (!rate) throw ParseError(line_no, "bad rate '" + fields[6] + "'");
            cell.rate = *rate;
        }
        if (!current || *week != *current) {
            if (current && filled != kNumGroups + 1) {
                throw ParseError(line_no, "incomplete week block for " + current->str());
            }
            if (current && *week != current->next()) {
                throw InvalidSpanError("week gap between " + current->str() + " and " +
                                       week->str());
            }
            current = *week;
            filled = 0;
        }
        if (fields[1] == "all" && fields[2] == "all") {
            if (filled != kNumGroups) {
                throw ParseError(line_no, "totals row before all ten group rows");
            }
            out.weeks.push_back(*week);
            out.groups.push_back(row);
            out.totals.push_back(cell);
            ++filled;
            continue;
        }
        Sex sex;
        if (fields[1] == "f") {
            sex = Sex::female;
        } else if (fields[1] == "m") {
            sex = Sex::male;
        } else {
            throw ParseError(line_no, "bad sex '" + fields[1] + "'");
        }
        const auto age = age_group_from_token(fields[2]);
        if (!age) {
            throw ParseError(line_no, "bad age group '" + fields[2] + "'");
        }
        const std::size_t g = group_index(sex, *age);
        if (g != filled) {
            throw ParseError(line_no, "group rows out of order (expected " +
                                          group_dim_label(filled) + ")");
        }
        row[g] = cell;
        ++filled;
    }
    if (current && filled != kNumGroups + 1) {
        throw ParseError(line_no, "incomplete week block for " + current->str());
    }
    return out;
}

}  // namespace ecpd
