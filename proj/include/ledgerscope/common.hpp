#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace ledgerscope {

using Satoshi = std::int64_t;
inline constexpr Satoshi kSatoshisPerCoin = 100'000'000;

// A UTC calendar day, counted from 1970-01-01.
struct Day {
  std::int32_t value = 0;

  friend constexpr auto operator<=>(Day, Day) = default;
  constexpr Day operator+(std::int32_t n) const { return Day{value + n}; }
  constexpr Day operator-(std::int32_t n) const { return Day{value - n}; }
  constexpr std::int32_t operator-(Day other) const { return value - other.value; }

  std::int64_t start_seconds() const { return std::int64_t{value} * 86400; }
  // First second of the following day; a transaction belongs to this day iff
  // its timestamp is strictly below this value.
  std::int64_t end_seconds() const { return start_seconds() + 86400; }
};

Day day_of(std::int64_t unix_seconds);
std::string to_iso(Day day);
std::string to_iso_timestamp(std::int64_t unix_seconds);
// Accepts YYYY-MM-DD.
Day parse_iso_day(std::string_view text);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input could not be read in the declared format.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(fmt::format("line {}: {}", line, what)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input was readable but violates a domain invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

void log_info(std::string_view message);
void log_warn(std::string_view message);
void set_quiet(bool quiet);

// Shortest round-trip decimal representation, used for every CSV cell.
std::string format_real(double value);

}  // namespace ledgerscope
