#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "tuition/error.hpp"

namespace tuition {

// Whole Indonesian rupiah. There are no minor units; every operation is
// exact and throws ErrorCode::Overflow instead of wrapping.
class Idr {
 public:
  constexpr Idr() = default;
  constexpr explicit Idr(std::int64_t value) : value_(value) {}

  constexpr std::int64_t value() const noexcept { return value_; }
  constexpr bool is_zero() const noexcept { return value_ == 0; }
  constexpr bool is_negative() const noexcept { return value_ < 0; }

  friend constexpr auto operator<=>(Idr, Idr) = default;

  friend Idr operator+(Idr a, Idr b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a.value_, b.value_, &out)) {
      throw Error(ErrorCode::Overflow, "IDR addition overflow");
    }
    return Idr(out);
  }
  friend Idr operator-(Idr a, Idr b) {
    std::int64_t out = 0;
    if (__builtin_sub_overflow(a.value_, b.value_, &out)) {
      throw Error(ErrorCode::Overflow, "IDR subtraction overflow");
    }
    return Idr(out);
  }
  friend Idr operator*(Idr a, std::int64_t k) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a.value_, k, &out)) {
      throw Error(ErrorCode::Overflow, "IDR multiplication overflow");
    }
    return Idr(out);
  }
  Idr& operator+=(Idr other) { return *this = *this + other; }
  Idr& operator-=(Idr other) { return *this = *this - other; }

  std::string to_string() const { return std::to_string(value_); }

 private:
  std::int64_t value_ = 0;
};

inline Idr max(Idr a, Idr b) { return a < b ? b : a; }

}  // namespace tuition
