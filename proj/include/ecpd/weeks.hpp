#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "ecpd/errors.hpp"

namespace ecpd {

/// Number of ISO-8601 weeks in a year (52 or 53).
inline int iso_weeks_in_year(int year) {
    using namespace std::chrono;
    const weekday jan1{sys_days{std::chrono::year{year} / January / 1}};
    const bool leap = std::chrono::year{year}.is_leap();
    return (jan1 == Thursday || (leap && jan1 == Wednesday)) ? 53 : 52;
}

/// An ISO week, written "YYYY-Www" (e.g. "2019-W27").
struct IsoWeek {
    int year = 0;
    int week = 0;

    auto operator<=>(const IsoWeek&) const = default;

    bool valid() const {
        return year >= 1 && week >= 1 && week <= iso_weeks_in_year(year);
    }

    IsoWeek next() const {
        if (week < iso_weeks_in_year(year)) {
            return {year, week + 1};
        }
        return {year + 1, 1};
    }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-W%02d", year, week);
        return buf;
    }

    static std::optional<IsoWeek> parse(std::string_view text) {
        // strict YYYY-Www
        if (text.size() != 8 || text[4] != '-' || text[5] != 'W') {
            return std::nullopt;
        }
        int y = 0;
        int w = 0;
        for (int i = 0; i < 4; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            y = y * 10 + (text[i] - '0');
        }
        for (int i = 6; i < 8; ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            w = w * 10 + (text[i] - '0');
        }
        IsoWeek out{y, w};
        if (!out.valid()) return std::nullopt;
        return out;
    }
};

/// Parse a week label or throw.
inline IsoWeek parse_week_label(std::string_view text) {
    auto w = IsoWeek::parse(text);
    if (!w) {
        throw InvalidInputError("bad week label '" + std::string(text) +
                                "' (expected YYYY-Www)");
    }
    return *w;
}

/// Number of weeks in the inclusive span [from, to]; 0 if to < from.
inline std::size_t weeks_between(IsoWeek from, IsoWeek to) {
    if (to < from) return 0;
    std::size_t n = 1;
    for (IsoWeek w = from; w != to; w = w.next()) ++n;
    return n;
}

}  // namespace ecpd
