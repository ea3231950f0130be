#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "mfpart/errors.hpp"
#include "mfpart/timestamp.hpp"

namespace mfpart {

struct Tick {
    Timestamp time;
    double price = 0.0;
};

/// Tick-by-tick prices for one instrument in event-time order.
struct TickSeries {
    std::string instrument_id;
    std::vector<Tick> ticks;
};

/// Column names looked up in the tick CSV header. The instrument column is
/// optional; when absent the caller-supplied fallback id is used.
struct TickSchema {
    std::string instrument_column = "instrument";
    std::string timestamp_column = "timestamp";
    std::string price_column = "price";
};

struct ParsedTicks {
    TickSeries series;
    std::size_t dropped = 0;  // unparsable timestamp or non-positive/unparsable price
};

/// Half-open intraday window [start, end), in minutes after midnight.
struct SessionWindow {
    int start_minute = 0;
    int end_minute = 0;

    int minutes() const { return end_minute - start_minute; }
    bool contains(int second_of_day) const {
        return second_of_day >= start_minute * 60 && second_of_day < end_minute * 60;
    }
};

/// Continuous-auction windows plus the set of trading days. An empty
/// trading_days set means "every date that has ticks".
struct SessionCalendar {
    SessionWindow morning{9 * 60 + 30, 11 * 60 + 30};
    SessionWindow afternoon{13 * 60, 15 * 60};
    std::set<Date> trading_days;

    int bins_per_day() const { return morning.minutes() + afternoon.minutes(); }

    void validate() const {
        if (morning.minutes() <= 0 || afternoon.minutes() <= 0)
            throw FormatError("calendar: session windows must have positive length");
        if (morning.start_minute < 0 || afternoon.end_minute > 24 * 60)
            throw FormatError("calendar: session windows must lie within one day");
        if (morning.end_minute > afternoon.start_minute)
            throw FormatError("calendar: morning and afternoon windows overlap");
    }

    bool in_session(Timestamp t) const {
        const int sod = seconds_of_day(t);
        return morning.contains(sod) || afternoon.contains(sod);
    }

    bool is_trading_day(Date d) const { return trading_days.empty() || trading_days.count(d) > 0; }
};

/// Shanghai/Shenzhen A-share continuous double auction: 09:30-11:30 and
/// 13:00-15:00, 240 one-minute bins per day.
inline SessionCalendar cn_a_share_calendar() { return SessionCalendar{}; }

struct TimedReturn {
    Timestamp time;
    double value = 0.0;
};

/// Fixed one-minute volatility bins. bin_starts is empty for synthetic series
/// that have no wall-clock alignment.
struct VolatilitySeries {
    std::string instrument_id;
    std::vector<double> values;
    std::vector<Timestamp> bin_starts;
    std::vector<std::size_t> day_boundaries;
    std::vector<Date> partial_days;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

inline int find_column(const std::vector<std::string_view>& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

}  // namespace detail

/// Parses tick CSV text. Output is stably sorted by timestamp, so ticks that
/// share a second keep their arrival order.
inline ParsedTicks parse_ticks(std::string_view text, const TickSchema& schema = {},
                               std::string_view fallback_id = "") {
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
            if (!detail::trim(line).empty()) return true;
        }
        return false;
    };

    std::string_view header_line;
    if (!next_line(header_line)) throw EmptyInputError("tick input is empty");
    if (header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
    const auto header = detail::split_csv_line(header_line);
    const int ts_col = detail::find_column(header, schema.timestamp_column);
    const int px_col = detail::find_column(header, schema.price_column);
    const int id_col = detail::find_column(header, schema.instrument_column);
    if (ts_col < 0 || px_col < 0)
        throw FormatError("tick header must name '" + schema.timestamp_column + "' and '" + schema.price_column +
                          "' columns");
    const auto needed = static_cast<std::size_t>(std::max({ts_col, px_col, id_col}) + 1);

    ParsedTicks out;
    out.series.instrument_id = std::string(fallback_id);
    bool have_id = false;
    std::string_view line;
    while (next_line(line)) {
        const auto fields = detail::split_csv_line(line);
        if (fields.size() < needed) {
            ++out.dropped;
            continue;
        }
        const auto ts = parse_timestamp(fields[ts_col]);
        double price = 0.0;
        if (!ts || !detail::parse_double(fields[px_col], price) || !std::isfinite(price) || price <= 0.0) {
            ++out.dropped;
            continue;
        }
        if (id_col >= 0) {
            const std::string_view id = fields[id_col];
            if (!have_id) {
                out.series.instrument_id = std::string(id);
                have_id = true;
            } else if (id != out.series.instrument_id) {
                throw FormatError("tick input mixes instruments '" + out.series.instrument_id + "' and '" +
                                  std::string(id) + "'");
            }
        }
        out.series.ticks.push_back({*ts, price});
    }
    if (out.series.ticks.empty()) throw EmptyInputError("tick input has no valid rows");
    std::stable_sort(out.series.ticks.begin(), out.series.ticks.end(),
                     [](const Tick& a, const Tick& b) { return a.time < b.time; });
    return out;
}

/// Reads a whole file, transparently inflating gzip framing.
inline std::string read_maybe_gzip(const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw FormatError("cannot open " + path.string());
    std::string data;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) data.append(buf, static_cast<std::size_t>(n));
    int errnum = Z_OK;
    const char* msg = gzerror(f, &errnum);
    const bool failed = n < 0 || (errnum != Z_OK && errnum != Z_STREAM_END);
    const std::string err = failed ? std::string(msg) : std::string();
    gzclose(f);
    if (failed) throw FormatError("read error in " + path.string() + ": " + err);
    return data;
}

inline ParsedTicks read_tick_file(const std::filesystem::path& path, const TickSchema& schema = {}) {
    std::string stem = path.filename().string();
    for (auto ext : {".gz", ".csv"})
        if (stem.size() > std::string_view(ext).size() && stem.ends_with(ext))
            stem.resize(stem.size() - std::string_view(ext).size());
    return parse_ticks(read_maybe_gzip(path), schema, stem);
}

/// Keeps only ticks inside the continuous-auction windows of trading days.
inline TickSeries filter_sessions(const TickSeries& ticks, const SessionCalendar& calendar) {
    calendar.validate();
    TickSeries out;
    out.instrument_id = ticks.instrument_id;
    for (const auto& t : ticks.ticks)
        if (calendar.is_trading_day(date_of(t.time)) && calendar.in_session(t.time)) out.ticks.push_back(t);
    if (out.ticks.empty()) throw EmptyInputError("no ticks fall inside the trading sessions");
    return out;
}

/// Event-time log returns between consecutive ticks of the same day. The
/// first tick of each day has no predecessor, so the overnight gap never
/// produces a return.
inline std::vector<TimedReturn> compute_returns(const TickSeries& ticks) {
    std::vector<TimedReturn> out;
    const auto& t = ticks.ticks;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (date_of(t[i].time) != date_of(t[i - 1].time)) continue;
        out.push_back({t[i].time, std::log(t[i].price) - std::log(t[i - 1].price)});
    }
    if (out.empty()) throw EmptyInputError("no trading day has two or more ticks");
    return out;
}

/// Sums |r| into one-minute bins (t - 1min, t]. A return stamped exactly at
/// a window's opening second lands in that window's first bin. Days come from
/// the calendar, or from the returns when the calendar lists none.
inline VolatilitySeries aggregate_volatility(const std::vector<TimedReturn>& returns, const SessionCalendar& calendar,
                                             std::string instrument_id = {}) {
    calendar.validate();
    std::set<Date> days = calendar.trading_days;
    if (days.empty())
        for (const auto& r : returns) days.insert(date_of(r.time));

    const int per_day = calendar.bins_per_day();
    const SessionWindow windows[2] = {calendar.morning, calendar.afternoon};

    VolatilitySeries out;
    out.instrument_id = std::move(instrument_id);
    out.values.assign(days.size() * static_cast<std::size_t>(per_day), 0.0);
    out.bin_starts.reserve(out.values.size());

    std::vector<Date> day_list(days.begin(), days.end());
    for (std::size_t d = 0; d < day_list.size(); ++d) {
        out.day_boundaries.push_back(d * static_cast<std::size_t>(per_day));
        for (const auto& w : windows)
            for (int k = 0; k < w.minutes(); ++k)
                out.bin_starts.push_back(Timestamp{day_list[d]} + std::chrono::minutes{w.start_minute + k});
    }

    // Per-day, per-window activity to flag halted or partial days.
    std::vector<std::array<bool, 2>> active(day_list.size(), {false, false});

    for (const auto& r : returns) {
        const auto it = std::lower_bound(day_list.begin(), day_list.end(), date_of(r.time));
        if (it == day_list.end() || *it != date_of(r.time)) continue;
        const auto day_index = static_cast<std::size_t>(it - day_list.begin());
        const int sod = seconds_of_day(r.time);
        int offset_bins = 0;
        for (int wi = 0; wi < 2; ++wi) {
            const auto& w = windows[wi];
            const int from_open = sod - w.start_minute * 60;
            if (from_open >= 0 && from_open <= w.minutes() * 60) {
                const int bin = from_open == 0 ? 0 : (from_open - 1) / 60;
                out.values[day_index * per_day + offset_bins + bin] += std::abs(r.value);
                active[day_index][wi] = true;
                break;
            }
            offset_bins += w.minutes();
        }
    }

    for (std::size_t d = 0; d < day_list.size(); ++d)
        if (!active[d][0] || !active[d][1]) out.partial_days.push_back(day_list[d]);
    return out;
}

/// filter -> returns -> one-minute volatility.
inline VolatilitySeries build_volatility(const TickSeries& ticks, const SessionCalendar& calendar) {
    const TickSeries session = filter_sessions(ticks, calendar);
    SessionCalendar effective = calendar;
    if (effective.trading_days.empty())
        for (const auto& t : session.ticks) effective.trading_days.insert(date_of(t.time));
    return aggregate_volatility(compute_returns(session), effective, session.instrument_id);
}

}  // namespace mfpart
