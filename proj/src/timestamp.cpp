#include "crimetype/timestamp.hpp"

#include <charconv>
#include <chrono>

namespace crimetype {

namespace {

std::chrono::sys_days to_days(int y, int m, int d) {
  return std::chrono::sys_days{std::chrono::year{y} / m / d};
}

bool read_int(std::string_view& text, char terminator, int& out) {
  const auto end = terminator == '\0' ? text.size() : text.find(terminator);
  if (end == std::string_view::npos || end == 0) return false;
  const auto field = text.substr(0, end);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return false;
  text.remove_prefix(terminator == '\0' ? end : end + 1);
  return true;
}

}  // namespace

bool Timestamp::valid() const {
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59) return false;
  if (month < 1 || month > 12 || day < 1) return false;
  return std::chrono::year_month_day{std::chrono::year{year} / month / day}.ok();
}

int Timestamp::day_of_week() const {
  const std::chrono::weekday wd{to_days(year, month, day)};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

int Timestamp::iso_week_year() const {
  const auto thursday = to_days(year, month, day) + std::chrono::days{3 - day_of_week()};
  return static_cast<int>(std::chrono::year_month_day{thursday}.year());
}

int Timestamp::iso_week() const {
  const auto thursday = to_days(year, month, day) + std::chrono::days{3 - day_of_week()};
  const auto jan1 = to_days(iso_week_year(), 1, 1);
  return static_cast<int>((thursday - jan1).count() / 7) + 1;
}

std::string Timestamp::format() const {
  std::string minutes = std::to_string(minute);
  if (minutes.size() < 2) minutes.insert(minutes.begin(), '0');
  return std::to_string(month) + "/" + std::to_string(day) + "/" + std::to_string(year) +
         " " + std::to_string(hour) + ":" + minutes;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  Timestamp ts;
  if (!read_int(text, '/', ts.month) || !read_int(text, '/', ts.day) ||
      !read_int(text, ' ', ts.year)) {
    return std::nullopt;
  }
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || text.size() - colon != 3) return std::nullopt;
  if (!read_int(text, ':', ts.hour) || !read_int(text, '\0', ts.minute)) return std::nullopt;
  if (!ts.valid()) return std::nullopt;
  return ts;
}

}  // namespace crimetype
