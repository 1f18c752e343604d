#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace treasure {

// Game money, held exactly as an integer count of twentieths of a point.
// The split fractions 0.2 and 0.05 are whole twentieths, so every payoff in
// the game is representable without rounding.
class Points {
 public:
  static constexpr std::int64_t kScale = 20;

  constexpr Points() = default;
  static constexpr Points whole(std::int64_t points) { return Points(points * kScale); }
  static constexpr Points twentieths(std::int64_t units) { return Points(units); }

  constexpr std::int64_t units() const { return units_; }
  constexpr double value() const { return static_cast<double>(units_) / kScale; }

  constexpr Points operator+(Points o) const { return Points(units_ + o.units_); }
  constexpr Points operator-(Points o) const { return Points(units_ - o.units_); }
  constexpr Points operator-() const { return Points(-units_); }
  constexpr Points& operator+=(Points o) {
    units_ += o.units_;
    return *this;
  }
  constexpr Points& operator-=(Points o) {
    units_ -= o.units_;
    return *this;
  }
  // Scale by a fraction expressed in twentieths (e.g. 4 => 0.2).
  constexpr Points share(int fraction_twentieths) const {
    return Points(units_ * fraction_twentieths / kScale);
  }

  constexpr auto operator<=>(const Points&) const = default;

  // Shortest exact decimal: "64", "-31", "4.05".
  std::string to_string() const;
  // Inverse of to_string; throws std::invalid_argument on anything that is
  // not an exact multiple of 0.05.
  static Points parse(std::string_view text);

 private:
  explicit constexpr Points(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

}  // namespace treasure
