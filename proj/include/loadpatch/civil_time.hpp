#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace loadpatch {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const; // YYYY-MM-DD
};

Date parse_date(std::string_view text);

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(const Date& d);
Date civil_from_days(std::int64_t z);

// Minutes since 1970-01-01 00:00, interpreted as naive civil local time.
// Meter timestamps carry no UTC offset in this pipeline; the configured
// timezone label travels as metadata only.
struct MinuteStamp {
    std::int64_t minutes = 0;

    auto operator<=>(const MinuteStamp&) const = default;

    Date date() const;
    int minute_of_day() const;
    std::string to_string() const; // YYYY-MM-DD HH:MM
};

MinuteStamp make_stamp(const Date& d, int minute_of_day);

// Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM", optional ":SS" (must be
// zero) and an optional trailing "Z". Throws Error{parse} otherwise.
MinuteStamp parse_timestamp(std::string_view text);

} // namespace loadpatch
