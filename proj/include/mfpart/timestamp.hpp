#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace mfpart {

/// Exchange-local wall-clock time at one-second resolution. No time zone
/// arithmetic happens anywhere in the toolkit.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

namespace detail {

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    const char* first = s.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Parses `YYYY-MM-DD`.
inline std::optional<Date> parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!detail::parse_fixed_int(s, 0, 4, y) || !detail::parse_fixed_int(s, 5, 2, m) ||
        !detail::parse_fixed_int(s, 8, 2, d))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

/// Parses `HH:MM` or `HH:MM:SS` into seconds after midnight.
inline std::optional<int> parse_time_of_day(std::string_view s) {
    int h = 0, mi = 0, se = 0;
    if (s.size() != 5 && s.size() != 8) return std::nullopt;
    if (s[2] != ':' || !detail::parse_fixed_int(s, 0, 2, h) || !detail::parse_fixed_int(s, 3, 2, mi))
        return std::nullopt;
    if (s.size() == 8 && (s[5] != ':' || !detail::parse_fixed_int(s, 6, 2, se))) return std::nullopt;
    if (h > 23 || mi > 59 || se > 59) return std::nullopt;
    return h * 3600 + mi * 60 + se;
}

/// Parses ISO-8601 `YYYY-MM-DDTHH:MM:SS` (a space separator is also accepted).
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (s.size() != 19 || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    auto tod = parse_time_of_day(s.substr(11));
    if (!date || !tod) return std::nullopt;
    return Timestamp{*date} + std::chrono::seconds{*tod};
}

inline Date date_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

inline int seconds_of_day(Timestamp t) { return static_cast<int>((t - Timestamp{date_of(t)}).count()); }

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::string format_timestamp(Timestamp t) {
    const int sod = seconds_of_day(t);
    char buf[40];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:%02d", sod / 3600, (sod / 60) % 60, sod % 60);
    return format_date(date_of(t)) + buf;
}

}  // namespace mfpart
