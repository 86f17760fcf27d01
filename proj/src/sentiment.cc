#include "d2s/sentiment.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "d2s/error.h"
#include "d2s/text.h"

namespace d2s {
namespace {

bool is_token_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || u >= 0x80;
}

bool has_alpha(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

bool is_all_caps(std::string_view s) {
  if (!has_alpha(s)) return false;
  return std::none_of(s.begin(), s.end(), [](char c) { return std::islower(static_cast<unsigned char>(c)); });
}

double sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

SentimentLexicon SentimentLexicon::parse(std::istream& in, std::string_view source) {
  SentimentLexicon lex;
  enum { kValence, kBoosters, kNegations } section = kValence;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
    std::string_view l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    if (l == "[boosters]") {
      section = kBoosters;
      continue;
    }
    if (l == "[negations]") {
      section = kNegations;
      continue;
    }
    if (l.front() == '[' && l.back() == ']' && l.size() > 2 && l.find('\t') == l.npos) {
      throw InputError(where() + "unknown section " + std::string(l));
    }
    std::vector<std::string_view> f = split(l, '\t');
    std::string token = to_lower(trim(f[0]));
    if (section == kNegations) {
      if (f.size() != 1) throw InputError(where() + "negation lines hold a single token");
      if (!lex.negations.insert(token).second) {
        throw InputError(where() + "duplicate negation '" + token + "'");
      }
      continue;
    }
    if (f.size() != 2) throw InputError(where() + "expected token<TAB>value");
    std::string_view vs = trim(f[1]);
    double v = 0;
    auto [p, ec] = std::from_chars(vs.data(), vs.data() + vs.size(), v);
    if (ec != std::errc() || p != vs.data() + vs.size() || !std::isfinite(v)) {
      throw InputError(where() + "bad value '" + std::string(vs) + "'");
    }
    auto& table = section == kValence ? lex.valence : lex.boosters;
    if (!table.emplace(token, v).second) {
      throw InputError(where() + "duplicate token '" + token + "'");
    }
    try {
      if (section == kValence && (v < -4.0 || v > 4.0)) {
        throw InputError("valence " + std::string(vs) + " outside [-4, 4]");
      }
      if (section == kBoosters && std::abs(std::abs(v) - SentimentConstants{}.booster) > 1e-12) {
        throw InputError("booster magnitude must be 0.293, got " + std::string(vs));
      }
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
  }
  return lex;
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sentiment lexicon " + path.string());
  return parse(in, path.string());
}

void SentimentLexicon::validate(const SentimentConstants& k) const {
  for (const auto& [t, v] : valence) {
    if (!(v >= -4.0 && v <= 4.0)) throw InputError("valence of '" + t + "' outside [-4, 4]");
  }
  for (const auto& [t, v] : boosters) {
    if (std::abs(std::abs(v) - k.booster) > 1e-12) {
      throw InputError("booster '" + t + "' must have magnitude " + format_double(k.booster));
    }
  }
}

std::vector<std::string> sentiment_tokens(std::string_view text, const SentimentLexicon& lex) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string_view chunk = text.substr(i, j - i);
    std::string low = to_lower(chunk);
    bool plain = std::all_of(chunk.begin(), chunk.end(), is_token_char);
    if (!plain && (lex.valence.count(low) || lex.boosters.count(low))) {
      out.emplace_back(chunk);
    } else {
      size_t a = 0;
      while (a < chunk.size()) {
        while (a < chunk.size() && !is_token_char(chunk[a])) ++a;
        size_t b = a;
        while (b < chunk.size() && is_token_char(chunk[b])) ++b;
        if (b > a) out.emplace_back(chunk.substr(a, b - a));
        a = b;
      }
    }
    i = j;
  }
  return out;
}

Sentiment sentiment_label(double compound, double threshold) {
  if (compound >= threshold) return Sentiment::kPositive;
  if (compound <= -threshold) return Sentiment::kNegative;
  return Sentiment::kNeutral;
}

SentimentScore score_post(std::string_view text, const SentimentLexicon& lex,
                          const SentimentOptions& opt) {
  const SentimentConstants& k = opt.constants;
  std::vector<std::string> raw = sentiment_tokens(text, lex);
  std::vector<std::string> low;
  low.reserve(raw.size());
  size_t caps = 0, alpha = 0;
  for (const std::string& t : raw) {
    low.push_back(to_lower(t));
    if (has_alpha(t)) {
      ++alpha;
      caps += is_all_caps(t) ? 1 : 0;
    }
  }
  const bool mixed_case = caps > 0 && caps < alpha;

  SentimentScore score;
  double total = 0.0;
  for (size_t i = 0; i < low.size(); ++i) {
    auto it = lex.valence.find(low[i]);
    if (it == lex.valence.end()) continue;
    double v = it->second;
    if (v == 0.0) {
      score.token_scores.emplace_back(low[i], 0.0);
      continue;
    }
    const double s = sign(v);
    if (mixed_case && is_all_caps(raw[i])) v += k.caps * s;
    bool negated = false;
    for (size_t d = 1; d <= 3 && d <= i; ++d) {
      const std::string& prev = low[i - d];
      if (auto b = lex.boosters.find(prev); b != lex.boosters.end()) {
        v += b->second * s * k.damping[d - 1];
      }
      if (lex.negations.count(prev)) negated = true;
    }
    if (negated) v *= k.negation;
    score.token_scores.emplace_back(low[i], v);
    total += v;
  }

  double s = total;
  if (opt.pooling == Pooling::kAverage && !score.token_scores.empty()) {
    s = total / static_cast<double>(score.token_scores.size());
  }
  int bangs = static_cast<int>(std::count(text.begin(), text.end(), '!'));
  s += std::min(bangs, k.max_exclamations) * k.exclamation * sign(s);
  score.sum = s;
  double c = s / std::sqrt(s * s + k.alpha);
  score.compound = std::clamp(c, -1.0, 1.0);
  score.label = sentiment_label(score.compound, k.threshold);
  return score;
}

Corpus label_corpus(const Corpus& corpus, const SentimentLexicon& lex,
                    const SentimentOptions& opt) {
  std::vector<Post> posts = corpus.posts();
  for (Post& p : posts) p.sentiment = score_post(p.text, lex, opt).label;
  return Corpus(std::move(posts));
}

}  // namespace d2s
