#include "loadpatch/civil_time.hpp"

#include "loadpatch/errors.hpp"

#include <cstdio>

namespace loadpatch {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

int read_int(std::string_view s, std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || !is_digit(s[i])) {
            throw Error(ErrKind::parse, "bad numeric field in '" + std::string(s) + "'");
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

int days_in_month(int year, int month) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[month - 1];
}

} // namespace

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw Error(ErrKind::parse, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    Date d;
    d.year = read_int(text, 0, 4);
    d.month = read_int(text, 5, 2);
    d.day = read_int(text, 8, 2);
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw Error(ErrKind::parse, "invalid calendar date '" + std::string(text) + "'");
    }
    return d;
}

// Howard Hinnant's civil-from-days / days-from-civil.
std::int64_t days_from_civil(const Date& d) {
    const int y = d.year - (d.month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (month <= 2 ? 1 : 0)), static_cast<int>(month),
                static_cast<int>(day)};
}

Date MinuteStamp::date() const {
    std::int64_t days = minutes / 1440;
    if (minutes < 0 && minutes % 1440 != 0) {
        --days;
    }
    return civil_from_days(days);
}

int MinuteStamp::minute_of_day() const {
    std::int64_t m = minutes % 1440;
    if (m < 0) {
        m += 1440;
    }
    return static_cast<int>(m);
}

std::string MinuteStamp::to_string() const {
    const int mod = minute_of_day();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s %02d:%02d", date().to_string().c_str(), mod / 60,
                  mod % 60);
    return buf;
}

MinuteStamp make_stamp(const Date& d, int minute_of_day) {
    return MinuteStamp{days_from_civil(d) * 1440 + minute_of_day};
}

MinuteStamp parse_timestamp(std::string_view text) {
    if (text.size() < 16) {
        throw Error(ErrKind::parse, "timestamp too short: '" + std::string(text) + "'");
    }
    const Date d = parse_date(text.substr(0, 10));
    if (text[10] != ' ' && text[10] != 'T') {
        throw Error(ErrKind::parse, "expected ' ' or 'T' after date in '" + std::string(text) + "'");
    }
    const int hour = read_int(text, 11, 2);
    if (text[13] != ':') {
        throw Error(ErrKind::parse, "expected ':' in time of '" + std::string(text) + "'");
    }
    const int minute = read_int(text, 14, 2);
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        const int seconds = read_int(text, pos + 1, 2);
        if (seconds != 0) {
            throw Error(ErrKind::parse, "sub-minute timestamps unsupported: '" +
                                            std::string(text) + "'");
        }
        pos += 3;
    }
    if (pos < text.size() && text[pos] == 'Z') {
        ++pos;
    }
    if (pos != text.size()) {
        throw Error(ErrKind::parse, "trailing characters in timestamp '" + std::string(text) + "'");
    }
    if (hour > 23 || minute > 59) {
        throw Error(ErrKind::parse, "time of day out of range in '" + std::string(text) + "'");
    }
    return make_stamp(d, hour * 60 + minute);
}

} // namespace loadpatch
