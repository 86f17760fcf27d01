#include "d2s/text.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace d2s {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_alnum(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_word_char(char c) {
  return is_alnum(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

// Joiner rules: '-' glues any two word characters, ',' and '.' glue digits,
// '\'' glues alphanumerics.
bool joins(char prev, char joiner, char next) {
  switch (joiner) {
    case '-':
      return is_word_char(prev) && is_word_char(next);
    case ',':
    case '.':
      return is_digit(prev) && is_digit(next);
    case '\'':
      return is_alnum(prev) && is_alnum(next);
    default:
      return false;
  }
}

// Length of a mask token such as "[DRUG_KRATOM]" starting at text[pos], or 0.
size_t mask_token_length(std::string_view text, size_t pos) {
  constexpr std::string_view kPrefix = "[DRUG_";
  if (text.substr(pos, kPrefix.size()) != kPrefix) return 0;
  size_t i = pos + kPrefix.size();
  size_t letters = 0;
  while (i < text.size() && text[i] >= 'A' && text[i] <= 'Z') {
    ++i;
    ++letters;
  }
  if (letters == 0 || i >= text.size() || text[i] != ']') return 0;
  return i + 1 - pos;
}

int parse_fixed_int(std::string_view s, size_t pos, size_t len, bool* ok) {
  if (pos + len > s.size()) {
    *ok = false;
    return 0;
  }
  int v = 0;
  for (size_t i = pos; i < pos + len; ++i) {
    if (!is_digit(s[i])) {
      *ok = false;
      return 0;
    }
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (b < e && space(s[b])) ++b;
  while (e > b && space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char n = s[i + 1];
      if (n == 't' || n == 'n' || n == 'r' || n == '\\') {
        out += n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : '\\';
        ++i;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::optional<int64_t> parse_timestamp(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.empty()) return std::nullopt;

  bool all_digits = true;
  for (char c : s) all_digits = all_digits && is_digit(c);
  if (all_digits) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
  }

  bool ok = true;
  int year = parse_fixed_int(s, 0, 4, &ok);
  if (!ok || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int month = parse_fixed_int(s, 5, 2, &ok);
  int day = parse_fixed_int(s, 8, 2, &ok);
  if (!ok) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year},
                     std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  int64_t secs = sys_days{ymd}.time_since_epoch().count() * int64_t{86400};

  size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    ++pos;
    int hh = parse_fixed_int(s, pos, 2, &ok);
    if (!ok) return std::nullopt;
    pos += 2;
    int mm = 0;
    int ss = 0;
    if (pos < s.size() && s[pos] == ':') {
      mm = parse_fixed_int(s, pos + 1, 2, &ok);
      pos += 3;
      if (ok && pos < s.size() && s[pos] == ':') {
        ss = parse_fixed_int(s, pos + 1, 2, &ok);
        pos += 3;
      }
    }
    if (!ok || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    // Fractional seconds are truncated.
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && is_digit(s[pos])) ++pos;
    }
    secs += hh * 3600 + mm * 60 + ss;
  }
  if (pos < s.size()) {
    char z = s[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      int oh = parse_fixed_int(s, pos + 1, 2, &ok);
      pos += 3;
      int om = 0;
      if (ok && pos < s.size() && s[pos] == ':') ++pos;
      if (ok && pos < s.size()) {
        om = parse_fixed_int(s, pos, 2, &ok);
        pos += 2;
      }
      if (!ok) return std::nullopt;
      int off = oh * 3600 + om * 60;
      secs += z == '+' ? -off : off;
    }
  }
  if (pos != s.size() || secs < 0) return std::nullopt;
  return secs;
}

CivilTime civil_from_seconds(int64_t utc_seconds) {
  using namespace std::chrono;
  int64_t days_count = utc_seconds / 86400;
  if (utc_seconds % 86400 < 0) --days_count;
  year_month_day ymd{sys_days{days{days_count}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day())};
}

std::string format_timestamp(int64_t utc_seconds) {
  CivilTime c = civil_from_seconds(utc_seconds);
  int64_t rem = utc_seconds % 86400;
  if (rem < 0) rem += 86400;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", c.year,
                c.month, c.day, static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

std::string normalize_word(std::string_view word) {
  bool has_digit = false;
  for (char c : word) has_digit = has_digit || is_digit(c);
  std::string out;
  out.reserve(word.size());
  for (char c : word) {
    if (has_digit && (c == '-' || c == ',')) continue;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

std::vector<WordSpan> word_spans(std::string_view text) {
  std::vector<WordSpan> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    size_t b = i;
    ++i;
    while (i < n) {
      if (is_word_char(text[i])) {
        ++i;
      } else if (i + 1 < n && joins(text[i - 1], text[i], text[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    out.push_back({b, i, normalize_word(text.substr(b, i - b))});
  }
  return out;
}

std::string normalize_term(std::string_view term) {
  std::string out;
  for (const WordSpan& w : word_spans(term)) {
    if (!out.empty()) out += ' ';
    out += w.norm;
  }
  return out;
}

bool is_mask_token(std::string_view token) {
  return !token.empty() && mask_token_length(token, 0) == token.size();
}

std::vector<std::string> encoder_tokens(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (text[i] == '[') {
      size_t len = mask_token_length(text, i);
      if (len) {
        out.emplace_back(text.substr(i, len));
        i += len;
        continue;
      }
    }
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    size_t b = i;
    ++i;
    while (i < n) {
      if (is_word_char(text[i])) {
        ++i;
      } else if (i + 1 < n && joins(text[i - 1], text[i], text[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    out.push_back(normalize_word(text.substr(b, i - b)));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

std::string format_fixed(double v, int digits) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace d2s
