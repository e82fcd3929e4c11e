#include "ledgerscope/common.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>

#include <fmt/format.h>

namespace ledgerscope {

namespace {

std::atomic<bool> g_quiet{false};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Day day_of(std::int64_t unix_seconds) {
  return Day{static_cast<std::int32_t>(floor_div(unix_seconds, 86400))};
}

std::string to_iso(Day day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day.value}}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::string to_iso_timestamp(std::int64_t unix_seconds) {
  const Day day = day_of(unix_seconds);
  const std::int64_t rem = unix_seconds - day.start_seconds();
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", to_iso(day), rem / 3600, (rem / 60) % 60, rem % 60);
}

Day parse_iso_day(std::string_view text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto bad = [&] { return ValidationError(fmt::format("invalid date '{}', expected YYYY-MM-DD", text)); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  const char* p = text.data();
  if (std::from_chars(p, p + 4, y).ec != std::errc{} || std::from_chars(p + 5, p + 7, m).ec != std::errc{} ||
      std::from_chars(p + 8, p + 10, d).ec != std::errc{}) {
    throw bad();
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Day{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

void log_info(std::string_view message) {
  if (!g_quiet.load()) fmt::print(stderr, "[info] {}\n", message);
}

void log_warn(std::string_view message) { fmt::print(stderr, "[warn] {}\n", message); }

void set_quiet(bool quiet) { g_quiet.store(quiet); }

std::string format_real(double value) { return fmt::format("{}", value); }

}  // namespace ledgerscope
