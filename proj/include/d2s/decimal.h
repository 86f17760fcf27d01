#ifndef D2S_DECIMAL_H_
#define D2S_DECIMAL_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace d2s {

// Non-negative fixed-point amount with 8 fractional digits, stored as an exact
// scaled integer so BTC prices such as 0.0444 never drift.
struct Decimal {
  static constexpr int kFractionDigits = 8;
  static constexpr int64_t kScale = 100'000'000;

  int64_t scaled = 0;

  // Accepts "12", "0.0444", "1,250.5" (comma thousands groups). Rejects signs,
  // exponents and more than 8 fractional digits.
  static std::optional<Decimal> parse(std::string_view s);
  static Decimal from_scaled(int64_t v) { return Decimal{v}; }

  // Shortest exact rendering: "0.0444", "50", "1.5".
  std::string to_string() const;
  double to_double() const { return static_cast<double>(scaled) / kScale; }

  Decimal& operator+=(Decimal o) {
    scaled += o.scaled;
    return *this;
  }
  auto operator<=>(const Decimal&) const = default;
};

}  // namespace d2s

#endif  // D2S_DECIMAL_H_
