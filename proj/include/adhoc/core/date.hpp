#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace adhoc {

// Calendar date without time of day, stored as days since 1970-01-01.
class Date {
public:
  constexpr Date() = default;

  static Date from_ymd(int year, unsigned month, unsigned day);
  // Strict ISO-8601 calendar date, YYYY-MM-DD. Throws ValidationError.
  static Date parse(std::string_view text);
  static constexpr Date from_serial(std::int32_t days) { return Date(days); }

  std::int32_t serial() const noexcept { return days_; }
  int year() const noexcept;
  unsigned month() const noexcept;
  unsigned day() const noexcept;
  std::string to_string() const;

  Date plus_days(std::int32_t n) const noexcept { return Date(days_ + n); }

  friend constexpr auto operator<=>(Date, Date) = default;

private:
  constexpr explicit Date(std::int32_t days) : days_(days) {}
  std::int32_t days_ = 0;
};

}  // namespace adhoc
