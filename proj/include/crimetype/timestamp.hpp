#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace crimetype {

// Naive local date-time at minute precision.
struct Timestamp {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

  bool valid() const;

  // 0 = Monday ... 6 = Sunday
  int day_of_week() const;
  int iso_week() const;
  int iso_week_year() const;

  // M/D/YYYY H:MM, no zero padding on month, day or hour.
  std::string format() const;
};

/// Parses "M/D/YYYY H:MM" on a 24-hour clock. Returns nullopt on any
/// malformed or out-of-range component.
std::optional<Timestamp> parse_timestamp(std::string_view text);

}  // namespace crimetype
