#include "dynrisk/date.hpp"

#include "dynrisk/error.hpp"

#include <charconv>
#include <cstdio>

namespace dynrisk {

Date::Date(std::chrono::year_month_day ymd)
    : days_{static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())} {}

namespace {

int parse_digits(std::string_view text, std::string_view whole) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError("invalid date '" + std::string{whole} + "'");
    }
    return value;
}

} // namespace

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw ParseError("invalid date '" + std::string{iso} + "', expected YYYY-MM-DD");
    }
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (iso[i] < '0' || iso[i] > '9') {
            throw ParseError("invalid date '" + std::string{iso} + "'");
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{parse_digits(iso.substr(0, 4), iso)},
                                          std::chrono::month{static_cast<unsigned>(parse_digits(iso.substr(5, 2), iso))},
                                          std::chrono::day{static_cast<unsigned>(parse_digits(iso.substr(8, 2), iso))}};
    if (!ymd.ok()) {
        throw ParseError("invalid calendar date '" + std::string{iso} + "'");
    }
    return Date{ymd};
}

std::string Date::to_string() const {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_}}};
    char buf[16];
    const int year = static_cast<int>(ymd.year());
    const unsigned month = static_cast<unsigned>(ymd.month());
    const unsigned day = static_cast<unsigned>(ymd.day());
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
}

} // namespace dynrisk
