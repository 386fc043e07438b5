#pragma once

#include <cstdint>
#include <string>

namespace aqs {

// Civil timestamps are carried as whole hours since 1970-01-01T00:00 with no
// time zone. All arithmetic is proleptic-Gregorian.

struct CivilHour {
  int year;
  int month;  // 1..12
  int day;    // 1..31
  int hour;   // 0..23
};

std::int64_t days_from_civil(int year, int month, int day);
CivilHour civil_from_hours(std::int64_t hours);
std::int64_t hours_from_civil(int year, int month, int day, int hour);

// Day-of-year, 0-based (Jan 1 -> 0).
int day_of_year(std::int64_t hours);

// Accepts "YYYY-MM-DDTHH:MM", an optional ":SS" tail, an optional trailing
// "Z", and a space instead of the "T". Minutes and seconds must be zero.
// Throws std::invalid_argument on anything else.
std::int64_t parse_hour_iso(const std::string& text);

// "YYYY-MM-DDTHH:00"
std::string format_hour_iso(std::int64_t hours);

// "YYYY-MM-DD" -> days since epoch.
std::int64_t parse_date_iso(const std::string& text);
std::string format_date_iso(std::int64_t days);

}  // namespace aqs
