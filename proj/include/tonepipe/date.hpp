#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tonepipe {

// Calendar date at UTC day granularity.
using Date = std::chrono::year_month_day;

// Strict ISO-8601 date "YYYY-MM-DD". Rejects impossible calendar dates.
std::optional<Date> parse_date(std::string_view text);

std::string date_string(Date d);

inline Date next_day(Date d) {
    return Date{std::chrono::sys_days(d) + std::chrono::days{1}};
}

// Signed day count from a to b.
inline long days_between(Date a, Date b) {
    return (std::chrono::sys_days(b) - std::chrono::sys_days(a)).count();
}

}  // namespace tonepipe
