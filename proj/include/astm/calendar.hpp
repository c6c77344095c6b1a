#pragma once

#include <cstdio>
#include <string>

#include "astm/errors.hpp"

namespace astm {

/// Wall-clock timestamp at minute resolution, used for forecast features.
struct CalendarTime {
    int year = 2017;
    int month = 1; // 1-12
    int day = 1;   // 1-31
    int hour = 0;  // 0-23
    int minute = 0; // 0-59

    bool operator==(const CalendarTime&) const = default;
};

inline bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_month(int year, int month) {
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) throw ArgumentError("days_in_month: month out of range");
    if (month == 2 && is_leap_year(year)) return 29;
    return kDays[month - 1];
}

inline void validate_calendar(const CalendarTime& t) {
    if (t.month < 1 || t.month > 12) throw InvariantError("calendar month out of range");
    if (t.day < 1 || t.day > days_in_month(t.year, t.month))
        throw InvariantError("calendar day out of range");
    if (t.hour < 0 || t.hour > 23) throw InvariantError("calendar hour out of range");
    if (t.minute < 0 || t.minute > 59) throw InvariantError("calendar minute out of range");
}

/// Adds a (possibly negative) whole number of hours.
inline CalendarTime add_hours(CalendarTime t, long long hours) {
    long long h = t.hour + hours;
    long long day_shift = h >= 0 ? h / 24 : -((-h + 23) / 24);
    t.hour = static_cast<int>(h - day_shift * 24);
    while (day_shift > 0) {
        int dim = days_in_month(t.year, t.month);
        if (t.day + day_shift <= dim) {
            t.day += static_cast<int>(day_shift);
            day_shift = 0;
        } else {
            day_shift -= dim - t.day + 1;
            t.day = 1;
            if (++t.month > 12) {
                t.month = 1;
                ++t.year;
            }
        }
    }
    while (day_shift < 0) {
        if (t.day + day_shift >= 1) {
            t.day += static_cast<int>(day_shift);
            day_shift = 0;
        } else {
            day_shift += t.day;
            if (--t.month < 1) {
                t.month = 12;
                --t.year;
            }
            t.day = days_in_month(t.year, t.month);
        }
    }
    return t;
}

/// Formats as "YYYY-MM-DD HH:MM".
inline std::string format_calendar(const CalendarTime& t) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", t.year, t.month, t.day, t.hour,
                  t.minute);
    return buf;
}

/// Parses "YYYY-MM-DD HH:MM".
inline CalendarTime parse_calendar(const std::string& text) {
    CalendarTime t;
    if (std::sscanf(text.c_str(), "%d-%d-%d %d:%d", &t.year, &t.month, &t.day, &t.hour,
                    &t.minute) != 5) {
        throw ParseError("invalid timestamp '" + text + "', expected YYYY-MM-DD HH:MM");
    }
    validate_calendar(t);
    return t;
}

} // namespace astm
