#include "tuition/time.hpp"

#include <chrono>
#include <cstdio>

namespace tuition {

namespace {
constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                         unsigned second) {
  using namespace std::chrono;
  const sys_days date{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  const std::int64_t days = date.time_since_epoch().count();
  return Timestamp{days * kMsPerDay + (hour * 3600LL + minute * 60LL + second) * 1000LL};
}

std::string format_datetime(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t days = floor_div(t.ms, kMsPerDay);
  const std::int64_t in_day = (t.ms - days * kMsPerDay) / 1000;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u%02lld%02lld%02lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(in_day / 3600), static_cast<long long>(in_day / 60 % 60),
                static_cast<long long>(in_day % 60));
  return buf;
}

std::optional<Timestamp> parse_datetime(std::string_view text) {
  if (text.size() != 14) return std::nullopt;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
    return v;
  };
  const int y = num(0, 4);
  const unsigned mo = static_cast<unsigned>(num(4, 2));
  const unsigned d = static_cast<unsigned>(num(6, 2));
  const unsigned h = static_cast<unsigned>(num(8, 2));
  const unsigned mi = static_cast<unsigned>(num(10, 2));
  const unsigned s = static_cast<unsigned>(num(12, 2));
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return make_timestamp(y, mo, d, h, mi, s);
}

}  // namespace tuition
