#include "d2s/decimal.h"

#include <limits>

namespace d2s {

std::optional<Decimal> Decimal::parse(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int64_t whole = 0;
  size_t i = 0;
  size_t digits = 0;
  size_t group = 0;  // digits since the last thousands comma
  bool saw_comma = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      if (whole > (std::numeric_limits<int64_t>::max() / kScale - 9) / 10) return std::nullopt;
      whole = whole * 10 + (c - '0');
      ++digits;
      ++group;
    } else if (c == ',' && digits > 0 && (!saw_comma || group == 3)) {
      if (!saw_comma && group > 3) return std::nullopt;
      saw_comma = true;
      group = 0;
    } else {
      break;
    }
  }
  if (digits == 0 || (saw_comma && group != 3)) return std::nullopt;
  int64_t frac = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    int fdigits = 0;
    for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) {
      if (++fdigits > kFractionDigits) return std::nullopt;
      frac = frac * 10 + (s[i] - '0');
    }
    if (fdigits == 0) return std::nullopt;
    for (int k = fdigits; k < kFractionDigits; ++k) frac *= 10;
  }
  if (i != s.size()) return std::nullopt;
  return Decimal{whole * kScale + frac};
}

std::string Decimal::to_string() const {
  std::string out = std::to_string(scaled / kScale);
  int64_t frac = scaled % kScale;
  if (frac == 0) return out;
  std::string f = std::to_string(frac);
  f.insert(0, kFractionDigits - f.size(), '0');
  while (!f.empty() && f.back() == '0') f.pop_back();
  return out + "." + f;
}

}  // namespace d2s
