#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tuition {

// Logical instant in milliseconds since 1970-01-01T00:00:00 (UTC, no zone).
struct Timestamp {
  std::int64_t ms = 0;

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

  constexpr Timestamp plus_ms(std::int64_t delta) const { return Timestamp{ms + delta}; }
  constexpr bool whole_seconds() const { return ms % 1000 == 0; }
};

// YYYYMMDDHHMMSS; sub-second precision is truncated.
std::string format_datetime(Timestamp t);
// Strict parse of YYYYMMDDHHMMSS with calendar validation.
std::optional<Timestamp> parse_datetime(std::string_view text);

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour = 0,
                         unsigned minute = 0, unsigned second = 0);

// Source of "now" for every component. Nothing in the library reads the
// host clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = {}) : now_(start.ms) {}

  Timestamp now() const override { return Timestamp{now_.load(std::memory_order_acquire)}; }
  void set(Timestamp t) { now_.store(t.ms, std::memory_order_release); }
  void advance_ms(std::int64_t delta) { now_.fetch_add(delta, std::memory_order_acq_rel); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace tuition
