#pragma once

#include "tkg/errors.hpp"

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace tkg {

// A point on the multi-day recording timeline. Day is 1-based and
// unbounded above; time of day is integer seconds. All values are
// immutable and totally ordered by (day, seconds_of_day).
struct Timestamp {
    int day = 1;             // recording day, >= 1
    int seconds_of_day = 0;  // [0, 86399]

    auto operator<=>(const Timestamp&) const = default;

    bool valid() const noexcept { return day >= 1 && seconds_of_day >= 0 && seconds_of_day <= 86399; }

    int hour() const noexcept { return seconds_of_day / 3600; }
    int minute() const noexcept { return (seconds_of_day / 60) % 60; }
    int second() const noexcept { return seconds_of_day % 60; }

    static constexpr Timestamp origin() noexcept { return {1, 0}; }
    // Largest representable point; handy as a "no constraint" query time.
    static constexpr Timestamp max() noexcept { return {2147483647, 86399}; }
};

// Non-negative span of whole seconds.
struct Duration {
    long long seconds = 0;

    auto operator<=>(const Duration&) const = default;

    static constexpr Duration hours(long long h) noexcept { return {h * 3600}; }
    static constexpr Duration minutes(long long m) noexcept { return {m * 60}; }
};

// Closed interval [start, end] on the timeline.
struct TimeWindow {
    Timestamp start;
    Timestamp end;

    bool operator==(const TimeWindow&) const = default;

    bool contains(const Timestamp& t) const noexcept { return start <= t && t <= end; }

    static TimeWindow whole_day(int day) noexcept { return {{day, 0}, {day, 86399}}; }
};

// A relative time expression from a question, resolved against the
// query timestamp and (for first/last) a candidate timestamp list.
struct RelativeExpr {
    enum class Kind { yesterday, today, last_time, first_time, ago };

    Kind kind = Kind::today;
    Duration offset{};  // used by Kind::ago only

    static RelativeExpr yesterday() noexcept { return {Kind::yesterday, {}}; }
    static RelativeExpr today() noexcept { return {Kind::today, {}}; }
    static RelativeExpr last_time() noexcept { return {Kind::last_time, {}}; }
    static RelativeExpr first_time() noexcept { return {Kind::first_time, {}}; }
    static RelativeExpr ago(Duration d) noexcept { return {Kind::ago, d}; }
};

using ResolvedTime = std::variant<Timestamp, TimeWindow>;

// Parses the canonical grammar `[DAY<d> <HH>:<MM>:<SS>]`. The mixed-case
// comma variant `[DayX, HH:MM:SS]` is accepted on input; output always
// uses the canonical form. Surrounding whitespace is permitted.
// Throws Error{malformed_timestamp|out_of_range} with the byte offset of
// the fault.
Timestamp parse_timestamp(std::string_view text);

// Emits `[DAY<d> HH:MM:SS]`, zero-padded time fields, unpadded day.
// Bit-exact output is part of the export and query contracts.
std::string format_timestamp(const Timestamp& t);

// Shifts t back by d, borrowing across day boundaries. Throws
// Error{underflow} when the result would precede [DAY1 00:00:00].
Timestamp subtract(const Timestamp& t, const Duration& d);

// Resolves a relative expression against query time t_q.
//   last_time  -> max{t in candidates | t < t_q}
//   first_time -> min(candidates)
//   yesterday  -> full-day window of day(t_q) - 1
//   today      -> full-day window of day(t_q)
//   ago(d)     -> subtract(t_q, d)
// candidates must be sorted ascending without duplicates; it is ignored
// by yesterday/today/ago. Throws Error{no_candidate} or Error{underflow}.
ResolvedTime resolve_relative(const RelativeExpr& expr, const Timestamp& t_q,
                              std::span<const Timestamp> candidates);

} // namespace tkg
