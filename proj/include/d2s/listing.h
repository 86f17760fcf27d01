#ifndef D2S_LISTING_H_
#define D2S_LISTING_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2s/decimal.h"
#include "d2s/ontology.h"

namespace d2s {

struct RawListing {
  std::string market;
  int64_t captured_at = 0;  // UTC seconds
  std::string title;
  std::string description;
  std::string vendor;
  std::string price_text;
  std::string ship_from_text;
  std::string ship_to_text;
  // Optional external columns (market-level bookkeeping not derivable from
  // listing text).
  std::optional<Decimal> usd_value;
  std::optional<int64_t> withdrawals;
};

struct Amount {
  Decimal amount;    // > 0
  std::string unit;  // normalized surface form of a dosage_unit concept
  bool operator==(const Amount&) const = default;
};

enum class Currency { kBTC, kUSD };
std::string_view currency_name(Currency c);

struct Price {
  Currency currency = Currency::kUSD;
  Decimal amount;
  bool operator==(const Price&) const = default;
};

struct ListingRecord {
  std::string product_name;
  std::optional<std::string> substance;  // concept id
  std::optional<std::string> drug_class;
  std::optional<Amount> dosage;
  std::optional<Amount> quantity;
  std::string vendor;
  std::optional<Price> price;
  std::optional<std::string> ships_to;
  std::optional<std::string> ships_from;

  bool operator==(const ListingRecord&) const = default;
};

struct Extraction {
  ListingRecord record;
  std::vector<std::string> diagnostics;
};

// Gazetteer + pattern extraction of one listing. Never throws on content;
// fields that cannot be parsed stay empty and a diagnostic says why.
Extraction extract_listing(const RawListing& raw, const Ontology& ontology);

// All "<number> <unit>" amounts in `text` whose unit is a dosage_unit surface
// form, in order of appearance.
std::vector<Amount> find_amounts(std::string_view text, const Ontology& ontology);
// `BTC <number>`, `$<number>` or `<number> USD`.
std::optional<Price> parse_price(std::string_view text);
std::string format_amount(const Amount& a);  // "1.5 gram"
std::string format_price(const Price& p);    // "BTC 0.0444", "$12.5"

struct MarketSummary {
  size_t listings = 0;
  size_t vendors = 0;
  size_t substances = 0;  // distinct resolved substances
  size_t locations = 0;   // distinct ships_from and ships_to values
  Decimal usd_total;
  int64_t withdrawals = 0;

  bool operator==(const MarketSummary&) const = default;
};

// `usd_values`, when given, must be parallel to `records` and replaces the
// USD-denominated listing prices as the source of usd_total.
MarketSummary summarize_market(std::span<const ListingRecord> records,
                               std::optional<std::span<const Decimal>> usd_values = std::nullopt);

// Share of resolved listings per category. Keys are DrugCategory names plus
// "NovelSyntheticOpioid" and "Uncategorized".
std::map<std::string, double> category_shares(std::span<const ListingRecord> records,
                                              const Ontology& ontology);

// Line-delimited listing files: tab-separated RawListing fields in declaration
// order, optionally followed by usd_value and withdrawals. '#' lines are
// comments.
std::vector<RawListing> read_listings(std::istream& in, std::string_view source = "<input>");
RawListing parse_listing_line(std::string_view line, std::string_view source, size_t lineno);

void write_record_header(std::ostream& out);
void write_record(std::ostream& out, const ListingRecord& r);
void write_summary_header(std::ostream& out);
void write_summary(std::ostream& out, std::string_view market, const MarketSummary& s);

}  // namespace d2s

#endif  // D2S_LISTING_H_
