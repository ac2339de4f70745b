#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hydrocast {

// A UTC calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  // Strict ISO-8601 `YYYY-MM-DD`; throws ValidationError otherwise.
  static Date parse(std::string_view iso);

  constexpr std::int32_t days() const { return days_; }
  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::string iso() const;

  constexpr Date operator+(std::int32_t n) const { return Date(days_ + n); }
  constexpr Date operator-(std::int32_t n) const { return Date(days_ - n); }
  constexpr std::int32_t operator-(Date other) const { return days_ - other.days_; }
  constexpr Date& operator++() {
    ++days_;
    return *this;
  }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_ = 0;
};

// Closed interval of days [first, last]. Empty when last < first.
struct DateRange {
  Date first;
  Date last;

  constexpr bool empty() const { return last < first; }
  constexpr std::int32_t length() const { return empty() ? 0 : (last - first) + 1; }
  constexpr bool contains(Date d) const { return first <= d && d <= last; }
  constexpr bool contains(const DateRange& r) const {
    return !r.empty() && first <= r.first && r.last <= last;
  }
  constexpr bool operator==(const DateRange&) const = default;
};

}  // namespace hydrocast
