#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdekit {

// Civil (proleptic Gregorian) date, UTC, no time-of-day.
struct Date {
    int y = 1970;
    unsigned m = 1;
    unsigned d = 1;

    // Days since 1970-01-01 (Howard Hinnant's days_from_civil).
    [[nodiscard]] std::int64_t serial() const {
        const int yy = y - (m <= 2);
        const std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(yy - era * 400);
        const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static Date from_serial(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned dd = doy - (153 * mp + 2) / 5 + 1;
        const unsigned mm = mp + (mp < 10 ? 3 : -9);
        return Date{static_cast<int>(yy + (mm <= 2)), mm, dd};
    }

    [[nodiscard]] Date add_days(std::int64_t n) const { return from_serial(serial() + n); }

    [[nodiscard]] std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
        return buf;
    }

    friend auto operator<=>(const Date& a, const Date& b) { return a.serial() <=> b.serial(); }
    friend bool operator==(const Date& a, const Date& b) {
        return a.y == b.y && a.m == b.m && a.d == b.d;
    }
};

// Parses "YYYY-MM-DD"; throws std::invalid_argument on malformed input.
inline Date parse_date(std::string_view s) {
    auto fail = [&] { throw std::invalid_argument("invalid date: '" + std::string(s) + "' (expected YYYY-MM-DD)"); };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc() || p != part.data() + part.size()) fail();
    };
    num(s.substr(0, 4), y);
    num(s.substr(5, 2), m);
    num(s.substr(8, 2), d);
    if (m < 1 || m > 12 || d < 1 || d > 31) fail();
    Date date{y, m, d};
    if (Date::from_serial(date.serial()) != date) fail();  // e.g. Feb 30
    return date;
}

}  // namespace sdekit
