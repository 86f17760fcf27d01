#ifndef D2S_TEXT_H_
#define D2S_TEXT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace d2s {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Field escaping for tab-separated files: tab, newline, carriage return and
// backslash are written as \t, \n, \r and \\.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

// Accepts ISO-8601 UTC timestamps ("2015-12-31T23:59:59Z", optional fractional
// seconds, "+hh:mm" offsets, or a bare date) and plain integer seconds.
std::optional<int64_t> parse_timestamp(std::string_view s);
std::string format_timestamp(int64_t utc_seconds);

struct CivilTime {
  int year;
  unsigned month;  // 1..12
  unsigned day;
};
CivilTime civil_from_seconds(int64_t utc_seconds);

// A word of running text with its byte range in the source string. Words are
// maximal runs of ASCII alphanumerics, '_' and non-ASCII bytes, plus '-', ','
// '.' or '\'' when sandwiched between two such characters ("U-47,700", "1.5",
// "don't").
struct WordSpan {
  size_t begin = 0;
  size_t end = 0;
  std::string norm;  // normalize_word() of the raw bytes
};
std::vector<WordSpan> word_spans(std::string_view text);

// Lowercases a single word; inside words that contain a digit, '-' and ',' are
// dropped so "U-47,700", "u-47700" and "U47700" share one key.
std::string normalize_word(std::string_view word);

// Term normalization: words of `term` normalized and joined by one space.
// Surrounding punctuation disappears and internal whitespace collapses.
std::string normalize_term(std::string_view term);

// Tokens consumed by the neural encoders: normalized words, with entity mask
// tokens such as "[DRUG_KRATOM]" kept verbatim as single tokens.
std::vector<std::string> encoder_tokens(std::string_view text);

bool is_mask_token(std::string_view token);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);
// Fixed-point rendering with `digits` fractional digits (report files).
std::string format_fixed(double v, int digits);

}  // namespace d2s

#endif  // D2S_TEXT_H_
