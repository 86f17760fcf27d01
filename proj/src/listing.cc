#include "d2s/listing.h"

#include <istream>
#include <ostream>
#include <set>

#include "d2s/text.h"

namespace d2s {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }

// Extent of a number starting at `i`: digits, optional comma groups, optional
// fraction. Returns the end offset.
size_t number_end(std::string_view s, size_t i) {
  while (i < s.size() && (is_digit(s[i]) || ((s[i] == ',' || s[i] == '.') && i + 1 < s.size() &&
                                              is_digit(s[i + 1])))) {
    ++i;
  }
  return i;
}

// Case-insensitive prefix test.
bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && to_lower(s.substr(0, prefix.size())) == prefix;
}

std::optional<std::string> non_empty(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  return std::string(s);
}

}  // namespace

std::string_view currency_name(Currency c) { return c == Currency::kBTC ? "BTC" : "USD"; }

std::vector<Amount> find_amounts(std::string_view text, const Ontology& ontology) {
  std::vector<Amount> out;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    size_t b = i;
    size_t e = number_end(text, i);
    i = e;
    // Numbers glued to a code ("U-47,700", "MT45") are part of a name.
    if (b > 0 && (is_alnum(text[b - 1]) || text[b - 1] == '-' || text[b - 1] == ',' ||
                  text[b - 1] == '.')) {
      continue;
    }
    size_t u = e;
    while (u < text.size() && text[u] == ' ') ++u;
    size_t ue = u;
    while (ue < text.size() && is_alpha(text[ue])) ++ue;
    if (ue == u || (ue < text.size() && is_digit(text[ue]))) continue;
    std::string unit = to_lower(text.substr(u, ue - u));
    const LexiconEntry* entry = ontology.lookup(unit);
    if (!entry || ontology.find(entry->concept_id)->kind != ConceptKind::kDosageUnit) continue;
    auto amount = Decimal::parse(text.substr(b, e - b));
    if (!amount || amount->scaled <= 0) continue;
    out.push_back({*amount, entry->surface_form});
    i = ue;
  }
  return out;
}

std::optional<Price> parse_price(std::string_view raw) {
  std::string_view s = trim(raw);
  if (starts_with_ci(s, "btc")) {
    std::string_view num = trim(s.substr(3));
    if (auto d = Decimal::parse(num)) return Price{Currency::kBTC, *d};
    return std::nullopt;
  }
  if (!s.empty() && s[0] == '$') {
    if (auto d = Decimal::parse(trim(s.substr(1)))) return Price{Currency::kUSD, *d};
    return std::nullopt;
  }
  if (s.size() > 3 && to_lower(s.substr(s.size() - 3)) == "usd") {
    if (auto d = Decimal::parse(trim(s.substr(0, s.size() - 3)))) {
      return Price{Currency::kUSD, *d};
    }
  }
  return std::nullopt;
}

std::string format_amount(const Amount& a) { return a.amount.to_string() + " " + a.unit; }

std::string format_price(const Price& p) {
  if (p.currency == Currency::kBTC) return "BTC " + p.amount.to_string();
  return "$" + p.amount.to_string();
}

Extraction extract_listing(const RawListing& raw, const Ontology& ontology) {
  Extraction out;
  ListingRecord& r = out.record;
  auto& diag = out.diagnostics;
  r.product_name = raw.title;
  r.vendor = std::string(trim(raw.vendor));

  std::vector<GazetteerMatch> hits = ontology.scan(raw.title);
  for (const GazetteerMatch& m : ontology.scan(raw.description)) hits.push_back(m);
  if (hits.empty()) {
    diag.push_back("substance: no gazetteer match in title or description");
  } else {
    const Concept& c = *hits.front().concept_ptr;
    r.substance = c.id;
    if (const Concept* cls = ontology.class_parent(c)) {
      r.drug_class = cls->canonical_name;
    } else {
      diag.push_back("drug_class: substance '" + c.id + "' has no class parent");
    }
    std::vector<std::string> extra;
    for (size_t k = 1; k < hits.size(); ++k) {
      if (hits[k].concept_ptr->id != c.id) extra.push_back(hits[k].concept_ptr->id);
    }
    if (!extra.empty()) diag.push_back("substance: additional matches " + join(extra, ","));
  }

  std::vector<Amount> title_amounts = find_amounts(raw.title, ontology);
  std::vector<Amount> desc_amounts = find_amounts(raw.description, ontology);
  if (!title_amounts.empty()) {
    r.quantity = title_amounts.front();
  } else {
    diag.push_back("quantity: no number+unit pattern in title");
  }
  if (!desc_amounts.empty()) {
    r.dosage = desc_amounts.front();
  } else if (title_amounts.size() > 1) {
    r.dosage = title_amounts[1];
  } else {
    diag.push_back("dosage: no number+unit pattern in description");
  }

  if (trim(raw.price_text).empty()) {
    diag.push_back("price: empty");
  } else if (auto p = parse_price(raw.price_text)) {
    r.price = *p;
  } else {
    diag.push_back("price: unrecognized currency or amount '" + raw.price_text + "'");
  }

  r.ships_from = non_empty(raw.ship_from_text);
  r.ships_to = non_empty(raw.ship_to_text);
  if (!r.ships_from) diag.push_back("ships_from: empty");
  if (!r.ships_to) diag.push_back("ships_to: empty");
  return out;
}

MarketSummary summarize_market(std::span<const ListingRecord> records,
                               std::optional<std::span<const Decimal>> usd_values) {
  MarketSummary s;
  std::set<std::string> vendors, substances, locations;
  for (size_t i = 0; i < records.size(); ++i) {
    const ListingRecord& r = records[i];
    if (!r.vendor.empty()) vendors.insert(r.vendor);
    if (r.substance) substances.insert(*r.substance);
    if (r.ships_from) locations.insert(*r.ships_from);
    if (r.ships_to) locations.insert(*r.ships_to);
    if (usd_values) {
      if (i < usd_values->size()) s.usd_total += (*usd_values)[i];
    } else if (r.price && r.price->currency == Currency::kUSD) {
      s.usd_total += r.price->amount;
    }
  }
  s.listings = records.size();
  s.vendors = vendors.size();
  s.substances = substances.size();
  s.locations = locations.size();
  return s;
}

std::map<std::string, double> category_shares(std::span<const ListingRecord> records,
                                              const Ontology& ontology) {
  std::map<std::string, size_t> counts;
  size_t total = 0;
  for (const ListingRecord& r : records) {
    if (!r.substance) continue;
    const Concept* c = ontology.find(*r.substance);
    if (!c) continue;
    ++total;
    if (auto cat = ontology.super_category(*c)) {
      ++counts[std::string(category_name(*cat))];
    } else if (ontology.reaches(*c, "novel_synthetic_opioid")) {
      ++counts["NovelSyntheticOpioid"];
    } else {
      ++counts["Uncategorized"];
    }
  }
  std::map<std::string, double> shares;
  for (const auto& [k, n] : counts) {
    shares[k] = static_cast<double>(n) / static_cast<double>(total);
  }
  return shares;
}

RawListing parse_listing_line(std::string_view line, std::string_view source, size_t lineno) {
  std::vector<std::string_view> f = split(line, '\t');
  auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
  if (f.size() < 8 || f.size() > 10) {
    throw InputError(where() + "expected 8 to 10 tab-separated fields, got " +
                     std::to_string(f.size()));
  }
  RawListing r;
  r.market = unescape_field(f[0]);
  if (trim(f[1]).empty()) {
    r.captured_at = 0;
  } else if (auto ts = parse_timestamp(f[1])) {
    r.captured_at = *ts;
  } else {
    throw InputError(where() + "bad captured_at timestamp '" + std::string(f[1]) + "'");
  }
  r.title = unescape_field(f[2]);
  r.description = unescape_field(f[3]);
  r.vendor = unescape_field(f[4]);
  r.price_text = unescape_field(f[5]);
  r.ship_from_text = unescape_field(f[6]);
  r.ship_to_text = unescape_field(f[7]);
  if (f.size() > 8 && !trim(f[8]).empty()) {
    r.usd_value = Decimal::parse(trim(f[8]));
    if (!r.usd_value) throw InputError(where() + "bad usd_value '" + std::string(f[8]) + "'");
  }
  if (f.size() > 9 && !trim(f[9]).empty()) {
    auto d = Decimal::parse(trim(f[9]));
    if (!d || d->scaled % Decimal::kScale != 0) {
      throw InputError(where() + "bad withdrawals count '" + std::string(f[9]) + "'");
    }
    r.withdrawals = d->scaled / Decimal::kScale;
  }
  return r;
}

std::vector<RawListing> read_listings(std::istream& in, std::string_view source) {
  std::vector<RawListing> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_listing_line(line, source, lineno));
  }
  return out;
}

void write_record_header(std::ostream& out) {
  out << "product_name\tsubstance\tdrug_class\tdosage\tquantity\tvendor\tprice\tships_to\tships_"
         "from\n";
}

void write_record(std::ostream& out, const ListingRecord& r) {
  auto opt = [](const std::optional<std::string>& s) { return s ? escape_field(*s) : ""; };
  out << escape_field(r.product_name) << '\t' << opt(r.substance) << '\t' << opt(r.drug_class)
      << '\t' << (r.dosage ? format_amount(*r.dosage) : "") << '\t'
      << (r.quantity ? format_amount(*r.quantity) : "") << '\t' << escape_field(r.vendor) << '\t'
      << (r.price ? format_price(*r.price) : "") << '\t' << opt(r.ships_to) << '\t'
      << opt(r.ships_from) << '\n';
}

void write_summary_header(std::ostream& out) {
  out << "market\tlistings\tvendors\tsubstances\tlocations\tusd_total\twithdrawals\n";
}

void write_summary(std::ostream& out, std::string_view market, const MarketSummary& s) {
  out << market << '\t' << s.listings << '\t' << s.vendors << '\t' << s.substances << '\t'
      << s.locations << '\t' << s.usd_total.to_string() << '\t' << s.withdrawals << '\n';
}

}  // namespace d2s
