#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "ecpd/excess_mortality.hpp"

using namespace ecpd;

namespace {

constexpr std::string_view kStmfHeader =
    "CountryCode,Year,Week,Sex,D0_14,D15_64,D65_74,D75_84,D85p,DTotal";

/// Full synthetic record set: positive, deterministic, group-dependent.
std::vector<WeeklyDeathRecord> full_records(int first_year, int last_year) {
    std::vector<WeeklyDeathRecord> records;
    for (int year = first_year; year <= last_year; ++year) {
        const int weeks = iso_weeks_in_year(year);
        for (int week = 1; week <= weeks; ++week) {
            for (std::size_t g = 0; g < kNumGroups; ++g) {
                const double deaths = 100.0 + 10.0 * static_cast<double>(g) +
                                      (week % 5) + (year - first_year);
                records.push_back({year, week, group_sex(g), group_age(g), deaths});
            }
        }
    }
    return records;
}

}  // namespace

TEST_CASE("one STMF row yields five records per sex", "[excess]") {
    std::istringstream in(std::string(kStmfHeader) +
                          "\nBEL,2020,15,f,12,190,180,320,560,1262\n");
    const auto parsed = parse_weekly_deaths(in);
    REQUIRE(parsed.records.size() == 5);
    REQUIRE(parsed.skipped.empty());
    const double expected[] = {12, 190, 180, 320, 560};
    for (std::size_t g = 0; g < 5; ++g) {
        const auto& record = parsed.records[g];
        REQUIRE(record.year == 2020);
        REQUIRE(record.iso_week == 15);
        REQUIRE(record.sex == Sex::female);
        REQUIRE(record.age_group == kAgeGroups[g]);
        REQUIRE(record.deaths == expected[g]);
    }
}

TEST_CASE("both-sex and unknown-sex rows are skipped with line numbers", "[excess]") {
    std::istringstream in(std::string(kStmfHeader) +
                          "\nBEL,2020,15,b,24,380,360,640,1120,2524\n"
                          "BEL,2020,15,f,12,190,180,320,560,1262\n"
                          "BEL,2020,15,x,12,190,180,320,560,1262\n");
    const auto parsed = parse_weekly_deaths(in);
    REQUIRE(parsed.records.size() == 5);
    REQUIRE(parsed.skipped.size() == 2);
    REQUIRE(parsed.skipped[0].line == 2);
    REQUIRE(parsed.skipped[1].line == 4);
    REQUIRE(parsed.skipped[1].reason.find("unknown sex") != std::string::npos);
}

TEST_CASE("country filter keeps only the selected code", "[excess]") {
    std::istringstream in(std::string(kStmfHeader) +
                          "\nNLD,2020,15,f,9,150,140,260,480,1039\n"
                          "BEL,2020,15,f,12,190,180,320,560,1262\n");
    ColumnMapping mapping;
    mapping.country_filter = "BEL";
    const auto parsed = parse_weekly_deaths(in, mapping);
    REQUIRE(parsed.records.size() == 5);
    REQUIRE(parsed.skipped.size() == 1);
    REQUIRE(parsed.skipped[0].line == 2);
}

TEST_CASE("invalid weeks and numbers name the line", "[excess]") {
    {
        std::istringstream in(std::string(kStmfHeader) +
                              "\nBEL,2020,54,f,1,2,3,4,5,15\n");
        REQUIRE_THROWS_MATCHES(parse_weekly_deaths(in), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("line 2")));
    }
    {
        // 2015 has 53 ISO weeks, 2019 only 52
        std::istringstream in(std::string(kStmfHeader) +
                              "\nBEL,2019,53,f,1,2,3,4,5,15\n");
        REQUIRE_THROWS_AS(parse_weekly_deaths(in), ParseError);
    }
    {
        std::istringstream in(std::string(kStmfHeader) +
                              "\nBEL,2020,10,f,1,2,oops,4,5,12\n");
        REQUIRE_THROWS_MATCHES(parse_weekly_deaths(in), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("D65_74")));
    }
    {
        std::istringstream in(std::string(kStmfHeader) +
                              "\nBEL,2020,10,f,-1,2,3,4,5,13\n");
        REQUIRE_THROWS_AS(parse_weekly_deaths(in), ParseError);
    }
}

TEST_CASE("missing columns and duplicates are rejected", "[excess]") {
    {
        std::istringstream in("CountryCode,Year,Week,Sex,D0_14,D15_64,D65_74,D75_84\n");
        REQUIRE_THROWS_MATCHES(parse_weekly_deaths(in), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("D85p")));
    }
    {
        std::istringstream in(std::string(kStmfHeader) +
                              "\nBEL,2020,15,f,1,2,3,4,5,15\n"
                              "BEL,2020,15,f,1,2,3,4,5,15\n");
        REQUIRE_THROWS_AS(parse_weekly_deaths(in), DuplicateDataError);
    }
}

TEST_CASE("empty input parses to an empty record list", "[excess]") {
    std::istringstream in("");
    const auto parsed = parse_weekly_deaths(in);
    REQUIRE(parsed.records.empty());
    REQUIRE(parsed.skipped.empty());
}

TEST_CASE("fractional split counts survive parsing", "[excess]") {
    std::istringstream in(std::string(kStmfHeader) +
                          "\nBEL,2020,15,m,0.5,190.25,180,320,560,1251\n");
    const auto parsed = parse_weekly_deaths(in);
    REQUIRE(parsed.records[0].deaths == 0.5);
    REQUIRE(parsed.records[1].deaths == 190.25);
}

TEST_CASE("baseline medians use the midpoint convention", "[excess]") {
    std::vector<WeeklyDeathRecord> records;
    const double five_values[] = {100, 102, 98, 101, 99};
    const double four_values[] = {100, 102, 98, 101};
    for (int i = 0; i < 5; ++i) {
        for (std::size_t g = 0; g < kNumGroups; ++g) {
            for (int week = 1; week <= 52; ++week) {
                double deaths = 50.0;
                if (week == 7) deaths = five_values[i];
                if (week == 8 && i < 4) deaths = four_values[i];
                if (week == 8 && i == 4) continue;  // only four observations
                records.push_back({2015 + i, week, group_sex(g), group_age(g), deaths});
            }
        }
    }
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    REQUIRE(baseline.median_for(Sex::female, AgeGroup::a85p, 7) == 100.0);
    REQUIRE(baseline.median_for(Sex::male, AgeGroup::a0_14, 8) == 100.5);
    REQUIRE(baseline.median_for(Sex::male, AgeGroup::a0_14, 1) == 50.0);
}

TEST_CASE("an empty baseline cell is an error naming the cell", "[excess]") {
    auto records = full_records(2015, 2019);
    std::erase_if(records, [](const WeeklyDeathRecord& r) {
        return r.iso_week == 30 && r.sex == Sex::male && r.age_group == AgeGroup::a65_74;
    });
    REQUIRE_THROWS_MATCHES(build_baseline(records, {2015, 2016, 2017, 2018, 2019}),
                           MissingBaselineError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("week 30")));
}

TEST_CASE("excess and rate follow their definitions", "[excess]") {
    auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    // actual 130 against median 100: excess 30, rate 0.30
    const double median = baseline.median_for(Sex::female, AgeGroup::a0_14, 1);
    std::vector<WeeklyDeathRecord> week_records;
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        const double group_median = baseline.median_for(group_sex(g), group_age(g), 1);
        week_records.push_back({2020, 1, group_sex(g), group_age(g),
                                g == 0 ? median * 1.3 : group_median});
    }
    const auto excess = compute_excess(week_records, baseline, {2020, 1}, {2020, 1});
    REQUIRE(excess.groups[0][0].excess == Catch::Approx(median * 0.3).margin(1e-12));
    REQUIRE(*excess.groups[0][0].rate == Catch::Approx(0.3).margin(1e-12));
    // identity case: actual == median
    REQUIRE(excess.groups[0][1].excess == 0.0);
    REQUIRE(*excess.groups[0][1].rate == 0.0);
}

TEST_CASE("zero medians trip the division guard unless opted out", "[excess]") {
    std::vector<WeeklyDeathRecord> records;
    for (int year = 2015; year <= 2019; ++year) {
        const int weeks = iso_weeks_in_year(year);
        for (int week = 1; week <= weeks; ++week) {
            for (std::size_t g = 0; g < kNumGroups; ++g) {
                records.push_back({year, week, group_sex(g), group_age(g),
                                   g == 0 && week == 2 ? 0.0 : 50.0});
            }
        }
    }
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    std::vector<WeeklyDeathRecord> week_records;
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        week_records.push_back({2019, 2, group_sex(g), group_age(g), 10.0});
    }
    REQUIRE_THROWS_AS(compute_excess(week_records, baseline, {2019, 2}, {2019, 2}),
                      ZeroMedianError);
    const auto excess = compute_excess(week_records, baseline, {2019, 2}, {2019, 2},
                                       ZeroMedianPolicy::emit_missing);
    REQUIRE_FALSE(excess.groups[0][0].rate.has_value());
    REQUIRE(excess.groups[0][0].excess == 10.0);
    REQUIRE(excess.groups[0][1].rate.has_value());
}

TEST_CASE("week 53 is baselined against the week-52 median", "[excess]") {
    const auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    const auto excess = compute_excess(records, baseline, {2015, 52}, {2016, 1});
    REQUIRE(excess.weeks.size() == 3);  // 2015-W52, 2015-W53, 2016-W01
    REQUIRE(excess.weeks[1] == IsoWeek{2015, 53});
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        REQUIRE(excess.groups[1][g].median ==
                baseline.median_for(group_sex(g), group_age(g), 52));
    }
}

TEST_CASE("pipeline identities hold on a full span", "[excess]") {
    const auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    const auto excess = compute_excess(records, baseline, {2015, 1}, {2019, 52});
    for (std::size_t pos = 0; pos < excess.weeks.size(); ++pos) {
        double sum_excess = 0.0;
        double sum_actual = 0.0;
        double sum_median = 0.0;
        for (std::size_t g = 0; g < kNumGroups; ++g) {
            const auto& cell = excess.groups[pos][g];
            REQUIRE(cell.median + cell.excess == cell.actual);  // exact
            REQUIRE(*cell.rate * cell.median == Catch::Approx(cell.excess).margin(1e-9));
            sum_excess += cell.excess;
            sum_actual += cell.actual;
            sum_median += cell.median;
        }
        REQUIRE(excess.totals[pos].excess == sum_excess);
        REQUIRE(excess.totals[pos].actual == sum_actual);
        REQUIRE(excess.totals[pos].median == sum_median);
    }
}

TEST_CASE("baseline excess medians vanish over the baseline years", "[excess]") {
    const auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    const auto excess = compute_excess(records, baseline, {2015, 1}, {2019, 52});
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        for (int week = 1; week <= 52; ++week) {
            std::vector<double> values;
            for (std::size_t pos = 0; pos < excess.weeks.size(); ++pos) {
                if (excess.weeks[pos].week == week) {
                    values.push_back(excess.groups[pos][g].excess);
                }
            }
            REQUIRE(values.size() == 5);
            REQUIRE(median_inplace(values) == 0.0);
        }
    }
}

TEST_CASE("detection series selects the requested columns", "[excess]") {
    const auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    const auto excess = compute_excess(records, baseline, {2019, 1}, {2019, 46});

    const auto all = build_detection_series(excess, {2019, 1});
    REQUIRE(all.rows() == 46);
    REQUIRE(all.dim == 10);
    REQUIRE(all.dim_labels.front() == "f_0_14");
    REQUIRE(all.dim_labels[4] == "f_85p");
    REQUIRE(all.dim_labels.back() == "m_85p");
    REQUIRE(all.time_labels.front() == "2019-W01");
    REQUIRE(all.at(0, 0) == *excess.groups[0][0].rate);

    const auto pair = build_detection_series(excess, {2019, 1}, std::nullopt,
                                             Grouping::per_age_group, AgeGroup::a85p);
    REQUIRE(pair.dim == 2);
    REQUIRE(pair.dim_labels == std::vector<std::string>{"f_85p", "m_85p"});
    REQUIRE(pair.at(3, 1) == *excess.groups[3][group_index(Sex::male, AgeGroup::a85p)].rate);

    const auto totals = build_detection_series(excess, {2019, 10}, IsoWeek{2019, 10},
                                               Grouping::totals_only);
    REQUIRE(totals.rows() == 1);
    REQUIRE(totals.dim == 1);
    REQUIRE(totals.at(0, 0) == *excess.totals[9].rate);

    REQUIRE_THROWS_AS(build_detection_series(excess, {2018, 1}), InvalidSpanError);
    REQUIRE_THROWS_AS(
        build_detection_series(excess, {2019, 1}, std::nullopt, Grouping::per_age_group),
        InvalidInputError);
}

TEST_CASE("excess CSV round trip is byte stable", "[excess]") {
    const auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    const auto excess = compute_excess(records, baseline, {2018, 50}, {2019, 8});

    std::ostringstream first;
    write_excess_csv(excess, first);
    std::istringstream back(first.str());
    const auto reread = read_excess_csv(back);
    std::ostringstream second;
    write_excess_csv(reread, second);
    REQUIRE(first.str() == second.str());
    REQUIRE(reread.weeks == excess.weeks);
    for (std::size_t pos = 0; pos < excess.weeks.size(); ++pos) {
        for (std::size_t g = 0; g < kNumGroups; ++g) {
            REQUIRE(reread.groups[pos][g].actual == excess.groups[pos][g].actual);
            REQUIRE(reread.groups[pos][g].rate == excess.groups[pos][g].rate);
        }
        REQUIRE(reread.totals[pos].excess == excess.totals[pos].excess);
    }
}

TEST_CASE("missing weeks in the span are an error", "[excess]") {
    auto records = full_records(2015, 2019);
    const auto baseline = build_baseline(records, {2015, 2016, 2017, 2018, 2019});
    std::erase_if(records, [](const WeeklyDeathRecord& r) {
        return r.year == 2019 && r.iso_week == 5 && r.sex == Sex::female &&
               r.age_group == AgeGroup::a75_84;
    });
    REQUIRE_THROWS_MATCHES(compute_excess(records, baseline, {2019, 4}, {2019, 6}),
                           InvalidSpanError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("2019-W05")));
}
