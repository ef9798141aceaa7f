#include "reef/timeutil.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>

namespace reef {

namespace {

using namespace std::chrono;

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<Timestamp> assemble(int y, int mo, int d, int h, int mi, int s, long micros) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + microseconds{micros};
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  int y, mo, d;
  if (!read_digits(text, 0, 4, y) || text.size() < 10 || text[4] != '-' ||
      !read_digits(text, 5, 2, mo) || text[7] != '-' || !read_digits(text, 8, 2, d)) {
    return std::nullopt;
  }
  if (text.size() == 10) return assemble(y, mo, d, 0, 0, 0, 0);
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  int h, mi, s;
  if (!read_digits(text, 11, 2, h) || text.size() < 19 || text[13] != ':' ||
      !read_digits(text, 14, 2, mi) || text[16] != ':' || !read_digits(text, 17, 2, s)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  long micros = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    long scale = 100000;
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (scale > 0) {
        micros += (text[pos] - '0') * scale;
        scale /= 10;
      }
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) return std::nullopt;
  return assemble(y, mo, d, h, mi, s, micros);
}

std::optional<Timestamp> parse_compact_timestamp(std::string_view text) {
  int y, mo, d, h, mi, s;
  if (text.size() != 16 || !read_digits(text, 0, 4, y) || !read_digits(text, 4, 2, mo) ||
      !read_digits(text, 6, 2, d) || text[8] != 'T' || !read_digits(text, 9, 2, h) ||
      !read_digits(text, 11, 2, mi) || !read_digits(text, 13, 2, s) || text[15] != 'Z') {
    return std::nullopt;
  }
  return assemble(y, mo, d, h, mi, s, 0);
}

std::string format_iso8601(Timestamp t) {
  const auto d = floor<days>(t);
  const year_month_day ymd{d};
  const hh_mm_ss<microseconds> hms{t - d};
  std::string out = fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", int(ymd.year()),
                                unsigned(ymd.month()), unsigned(ymd.day()), hms.hours().count(),
                                hms.minutes().count(), hms.seconds().count());
  if (hms.subseconds().count() != 0) out += fmt::format(".{:06d}", hms.subseconds().count());
  out += 'Z';
  return out;
}

std::string format_date(sys_days d) {
  const year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", int(ymd.year()), unsigned(ymd.month()),
                     unsigned(ymd.day()));
}

sys_days day_of(Timestamp t) { return floor<days>(t); }

int hour_of_day(Timestamp t) {
  return static_cast<int>(duration_cast<hours>(t - floor<days>(t)).count());
}

int minute_of_day(Timestamp t) {
  return static_cast<int>(duration_cast<minutes>(t - floor<days>(t)).count());
}

int day_of_year(sys_days d) {
  const year_month_day ymd{d};
  return static_cast<int>((d - sys_days{ymd.year() / January / 1}).count());
}

unsigned month_of(sys_days d) { return unsigned(year_month_day{d}.month()); }

Timestamp offset_seconds(Timestamp t, double secs) {
  return t + microseconds{static_cast<long long>(std::llround(secs * 1e6))};
}

double days_between(Timestamp a, Timestamp b) {
  return duration<double, days::period>(b - a).count();
}

}  // namespace reef
