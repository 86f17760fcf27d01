#include "d2s/topics.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "d2s/error.h"
#include "d2s/text.h"

namespace d2s {

const std::set<std::string, std::less<>>& default_stop_words() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",
      "does",  "for",   "from",  "get",   "got",   "had",   "has",   "have",  "he",    "her",
      "him",   "his",   "how",   "i",     "if",    "im",    "in",    "into",  "is",    "it",
      "its",   "just",  "me",    "my",    "of",    "on",    "or",    "our",   "out",   "she",
      "so",    "some",  "that",  "the",   "their", "them",  "then",  "there", "they",  "this",
      "to",    "up",    "was",   "we",    "were",  "what",  "when",  "which", "who",   "will",
      "with",  "would", "you",   "your"};
  return words;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                const std::set<std::string, std::less<>>* stop_words) {
  std::vector<std::string> out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!stop_words || !stop_words->count(tokens[i])) out.push_back(tokens[i]);
    std::string g = tokens[i];
    for (size_t n = 2; n <= 3 && i + n <= tokens.size(); ++n) {
      g += ' ';
      g += tokens[i + n - 1];
      out.push_back(g);
    }
  }
  return out;
}

std::vector<TopicTable> tfidf_topics(const Corpus& corpus, const TopicOptions& opt) {
  if (opt.k == 0) throw InputError("topics: k must be at least 1");
  // group -> ngram -> count
  std::map<std::string, std::unordered_map<std::string, double>> tf;
  for (const Post& p : corpus) {
    std::vector<std::string> groups;
    if (opt.group_by == TopicGroupBy::kSource) {
      groups.push_back(p.source);
    } else {
      for (DrugCategory c : p.drug_tags) groups.emplace_back(category_name(c));
    }
    if (groups.empty()) continue;
    std::string text = opt.mask_with ? mask_entities(p.text, *opt.mask_with) : p.text;
    std::vector<std::string> grams = ngrams(encoder_tokens(text), opt.stop_words);
    for (const std::string& g : groups) {
      auto& counts = tf[g];
      for (const std::string& gram : grams) counts[gram] += 1.0;
    }
  }
  std::unordered_map<std::string, double> df;
  for (const auto& [g, counts] : tf) {
    for (const auto& [gram, c] : counts) df[gram] += 1.0;
  }
  const double n = static_cast<double>(tf.size());
  std::vector<TopicTable> out;
  for (const auto& [g, counts] : tf) {
    TopicTable t{g, {}, opt.k};
    t.terms.reserve(counts.size());
    for (const auto& [gram, c] : counts) {
      double d = df[gram];
      double idf = opt.smooth_idf ? std::log((1.0 + n) / (1.0 + d)) + 1.0 : std::log(n / d);
      t.terms.push_back({gram, c * idf});
    }
    auto better = [](const TopicTerm& a, const TopicTerm& b) {
      return a.score != b.score ? a.score > b.score : a.ngram < b.ngram;
    };
    size_t keep = std::min(opt.k, t.terms.size());
    std::partial_sort(t.terms.begin(), t.terms.begin() + static_cast<long>(keep), t.terms.end(),
                      better);
    t.terms.resize(keep);
    out.push_back(std::move(t));
  }
  return out;
}

std::string period_label(int64_t utc_seconds, Period period) {
  CivilTime c = civil_from_seconds(utc_seconds);
  std::string y = std::to_string(c.year);
  if (period == Period::kYear) return y;
  return y + "-Q" + std::to_string((c.month - 1) / 3 + 1);
}

std::map<std::pair<std::string, std::string>, TopicTable> topics_over_time(
    const Corpus& corpus, Period period, const TopicOptions& opt) {
  std::map<std::string, std::vector<Post>> bins;
  for (const Post& p : corpus) bins[period_label(p.timestamp, period)].push_back(p);
  std::map<std::pair<std::string, std::string>, TopicTable> out;
  for (auto& [label, posts] : bins) {
    for (TopicTable& t : tfidf_topics(Corpus(std::move(posts)), opt)) {
      std::string g = t.group;
      out.emplace(std::make_pair(g, label), std::move(t));
    }
  }
  return out;
}

void write_topics(std::ostream& out,
                  const std::map<std::pair<std::string, std::string>, TopicTable>& tables) {
  out << "group\tperiod\trank\tngram\tscore\n";
  for (const auto& [key, t] : tables) {
    for (size_t r = 0; r < t.terms.size(); ++r) {
      out << key.first << '\t' << key.second << '\t' << r + 1 << '\t' << t.terms[r].ngram << '\t'
          << format_fixed(t.terms[r].score, 6) << '\n';
    }
  }
}

}  // namespace d2s
