#include "tkg/timeline.hpp"

#include <algorithm>
#include <cstdio>

namespace tkg {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::malformed_timestamp: return "malformed_timestamp";
        case Errc::out_of_range: return "out_of_range";
        case Errc::underflow: return "underflow";
        case Errc::no_candidate: return "no_candidate";
        case Errc::empty_input: return "empty_input";
        case Errc::stale_chunk: return "stale_chunk";
        case Errc::stale_index: return "stale_index";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::unsupported_format: return "unsupported_format";
        case Errc::corrupt_stream: return "corrupt_stream";
        case Errc::client_failure: return "client_failure";
        case Errc::summarizer_failure: return "summarizer_failure";
        case Errc::insufficient_evidence: return "insufficient_evidence";
        case Errc::bad_config: return "bad_config";
        case Errc::bad_record: return "bad_record";
    }
    return "unknown";
}

namespace {

[[noreturn]] void fail(Errc code, std::size_t offset, const std::string& what) {
    throw Error(code, what + " at byte " + std::to_string(offset), offset);
}

// Reads exactly two digits; returns -1 on a non-digit.
int two_digits(std::string_view s, std::size_t pos) {
    if (pos + 1 >= s.size()) return -1;
    char a = s[pos], b = s[pos + 1];
    if (a < '0' || a > '9' || b < '0' || b > '9') return -1;
    return (a - '0') * 10 + (b - '0');
}

bool iequal(char a, char b) {
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
    return lower(a) == lower(b);
}

} // namespace

Timestamp parse_timestamp(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;

    if (i >= text.size() || text[i] != '[') fail(Errc::malformed_timestamp, i, "expected '['");
    ++i;

    static constexpr std::string_view kDay = "DAY";
    for (char expected : kDay) {
        if (i >= text.size() || !iequal(text[i], expected))
            fail(Errc::malformed_timestamp, i, "expected 'DAY'");
        ++i;
    }

    std::size_t day_begin = i;
    long long day = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        day = day * 10 + (text[i] - '0');
        if (i - day_begin >= 9) fail(Errc::out_of_range, day_begin, "day too large");
        ++i;
    }
    if (i == day_begin) fail(Errc::malformed_timestamp, i, "expected day number");
    if (day < 1) fail(Errc::out_of_range, day_begin, "day is 1-based");

    // Canonical form uses a space; the supplement variant uses ", ".
    if (i < text.size() && text[i] == ',') ++i;
    if (i >= text.size() || text[i] != ' ') fail(Errc::malformed_timestamp, i, "expected ' ' before time");
    ++i;

    int hh = two_digits(text, i);
    if (hh < 0) fail(Errc::malformed_timestamp, i, "expected HH");
    if (hh > 23) fail(Errc::out_of_range, i, "hour out of range");
    i += 2;
    if (i >= text.size() || text[i] != ':') fail(Errc::malformed_timestamp, i, "expected ':'");
    ++i;

    int mm = two_digits(text, i);
    if (mm < 0) fail(Errc::malformed_timestamp, i, "expected MM");
    if (mm > 59) fail(Errc::out_of_range, i, "minute out of range");
    i += 2;
    if (i >= text.size() || text[i] != ':') fail(Errc::malformed_timestamp, i, "expected ':'");
    ++i;

    int ss = two_digits(text, i);
    if (ss < 0) fail(Errc::malformed_timestamp, i, "expected SS");
    if (ss > 59) fail(Errc::out_of_range, i, "second out of range");
    i += 2;

    if (i >= text.size() || text[i] != ']') fail(Errc::malformed_timestamp, i, "expected ']'");
    ++i;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    if (i != text.size()) fail(Errc::malformed_timestamp, i, "trailing characters");

    return Timestamp{static_cast<int>(day), hh * 3600 + mm * 60 + ss};
}

std::string format_timestamp(const Timestamp& t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "[DAY%d %02d:%02d:%02d]", t.day, t.hour(), t.minute(), t.second());
    return buf;
}

Timestamp subtract(const Timestamp& t, const Duration& d) {
    long long total = static_cast<long long>(t.day - 1) * 86400 + t.seconds_of_day - d.seconds;
    if (total < 0)
        throw Error(Errc::underflow, "shift of " + std::to_string(d.seconds) +
                                         "s from " + format_timestamp(t) + " precedes the timeline origin");
    return Timestamp{static_cast<int>(total / 86400) + 1, static_cast<int>(total % 86400)};
}

ResolvedTime resolve_relative(const RelativeExpr& expr, const Timestamp& t_q,
                              std::span<const Timestamp> candidates) {
    switch (expr.kind) {
        case RelativeExpr::Kind::yesterday:
            if (t_q.day <= 1)
                throw Error(Errc::underflow, "no day before " + format_timestamp(t_q));
            return TimeWindow::whole_day(t_q.day - 1);
        case RelativeExpr::Kind::today:
            return TimeWindow::whole_day(t_q.day);
        case RelativeExpr::Kind::ago:
            return subtract(t_q, expr.offset);
        case RelativeExpr::Kind::first_time:
            if (candidates.empty()) throw Error(Errc::no_candidate, "first_time over empty candidate set");
            return candidates.front();
        case RelativeExpr::Kind::last_time: {
            auto it = std::lower_bound(candidates.begin(), candidates.end(), t_q);
            if (it == candidates.begin())
                throw Error(Errc::no_candidate, "no candidate before " + format_timestamp(t_q));
            return *std::prev(it);
        }
    }
    throw Error(Errc::no_candidate, "unreachable relative expression kind");
}

} // namespace tkg
