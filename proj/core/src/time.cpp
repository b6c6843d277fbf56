#include "driftbench/time.hpp"

#include <charconv>
#include <cstdio>

#include "driftbench/errors.hpp"

namespace driftbench {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::format: return "format_error";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::duplicate_timestamp: return "duplicate_timestamp";
    case ErrorCode::range: return "range_error";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::shape: return "shape_error";
    case ErrorCode::config: return "config_error";
    case ErrorCode::input: return "input_error";
    case ErrorCode::ordering: return "ordering_error";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::authorization: return "authorization_error";
    case ErrorCode::precondition: return "precondition_error";
    case ErrorCode::no_usable_model: return "no_usable_model";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::forbidden: return "forbidden";
    case ErrorCode::io: return "io_error";
  }
  return "unknown";
}

namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw Error(ErrorCode::format, "bad timestamp: " + std::string(text));
  }
  return value;
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&] { throw Error(ErrorCode::format, "bad timestamp: " + std::string(text)); };
  if (text.size() < 20) fail();
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != 't') || text[13] != ':' ||
      text[16] != ':') {
    fail();
  }
  auto suffix = text.substr(19);
  if (suffix != "Z" && suffix != "z" && suffix != "+00:00") fail();

  const int y = read_digits(text, 0, 4);
  const int mo = read_digits(text, 5, 2);
  const int d = read_digits(text, 8, 2);
  const int h = read_digits(text, 11, 2);
  const int mi = read_digits(text, 14, 2);
  const int s = read_digits(text, 17, 2);

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) fail();
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

}  // namespace driftbench
