#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace dynrisk {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_{days_since_epoch} {}
    explicit Date(std::chrono::year_month_day ymd);

    /// Parses strict YYYY-MM-DD. Throws ParseError.
    static Date parse(std::string_view iso);

    std::string to_string() const;
    constexpr std::int32_t days_since_epoch() const noexcept { return days_; }

    constexpr Date operator+(std::int32_t days) const noexcept { return Date{days_ + days}; }
    constexpr Date operator-(std::int32_t days) const noexcept { return Date{days_ - days}; }
    constexpr std::int32_t operator-(Date other) const noexcept { return days_ - other.days_; }

    constexpr auto operator<=>(const Date &) const = default;

private:
    std::int32_t days_ = 0;
};

} // namespace dynrisk
