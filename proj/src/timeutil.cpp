#include "aqs/timeutil.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace aqs {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[m - 1];
}

int parse_int_field(const std::string& text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw std::invalid_argument("timestamp too short: " + text);
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw std::invalid_argument("bad numeric field in timestamp: " + text);
  }
  return value;
}

}  // namespace

std::int64_t days_from_civil(int year, int month, int day) {
  year -= month <= 2;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(day) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilHour civil_from_hours(std::int64_t hours) {
  std::int64_t days = hours / 24;
  int hour = static_cast<int>(hours % 24);
  if (hour < 0) {
    hour += 24;
    days -= 1;
  }
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CivilHour{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d),
                   hour};
}

std::int64_t hours_from_civil(int year, int month, int day, int hour) {
  return days_from_civil(year, month, day) * 24 + hour;
}

int day_of_year(std::int64_t hours) {
  const CivilHour c = civil_from_hours(hours);
  return static_cast<int>(days_from_civil(c.year, c.month, c.day) -
                          days_from_civil(c.year, 1, 1));
}

std::int64_t parse_hour_iso(const std::string& text) {
  // YYYY-MM-DD[T ]HH:MM[:SS][Z]
  if (text.size() < 16) throw std::invalid_argument("timestamp too short: " + text);
  const int year = parse_int_field(text, 0, 4);
  const int month = parse_int_field(text, 5, 2);
  const int day = parse_int_field(text, 8, 2);
  const int hour = parse_int_field(text, 11, 2);
  const int minute = parse_int_field(text, 14, 2);
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    throw std::invalid_argument("malformed timestamp: " + text);
  }
  std::size_t pos = 16;
  int second = 0;
  if (pos < text.size() && text[pos] == ':') {
    second = parse_int_field(text, pos + 1, 2);
    pos += 3;
  }
  if (pos < text.size() && text[pos] == 'Z') pos += 1;
  if (pos != text.size()) throw std::invalid_argument("malformed timestamp: " + text);

  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hour < 0 ||
      hour > 23) {
    throw std::invalid_argument("timestamp out of range: " + text);
  }
  if (minute != 0 || second != 0) {
    throw std::invalid_argument("timestamp not on the hour: " + text);
  }
  return hours_from_civil(year, month, day, hour);
}

std::string format_hour_iso(std::int64_t hours) {
  const CivilHour c = civil_from_hours(hours);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00", c.year, c.month, c.day, c.hour);
  return buf;
}

std::int64_t parse_date_iso(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw std::invalid_argument("malformed date: " + text);
  }
  const int year = parse_int_field(text, 0, 4);
  const int month = parse_int_field(text, 5, 2);
  const int day = parse_int_field(text, 8, 2);
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
    throw std::invalid_argument("date out of range: " + text);
  }
  return days_from_civil(year, month, day);
}

std::string format_date_iso(std::int64_t days) {
  const CivilHour c = civil_from_hours(days * 24);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

}  // namespace aqs
