#ifndef D2S_TOPICS_H_
#define D2S_TOPICS_H_

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "d2s/corpus.h"

namespace d2s {

struct TopicTerm {
  std::string ngram;
  double score = 0;
};

struct TopicTable {
  std::string group;
  std::vector<TopicTerm> terms;  // descending score, ties in lexicographic order
  size_t k = 0;
};

enum class TopicGroupBy { kSource, kDrugCategory };
enum class Period { kYear, kQuarter };

struct TopicOptions {
  size_t k = 10;
  TopicGroupBy group_by = TopicGroupBy::kSource;
  bool smooth_idf = false;  // ln((1+N)/(1+df)) + 1 instead of ln(N/df)
  // Mask drug mentions before counting; needs an ontology.
  const Ontology* mask_with = nullptr;
  const std::set<std::string, std::less<>>* stop_words = nullptr;  // unigrams only
};

// Small English stop-word list.
const std::set<std::string, std::less<>>& default_stop_words();

// n-grams (n = 1..3) over encoder tokens; stop words drop only unigrams.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                const std::set<std::string, std::less<>>* stop_words);

// One table per group in group-name order. Groups by drug category include a
// post once per tag; untagged posts are ignored for that grouping.
std::vector<TopicTable> tfidf_topics(const Corpus& corpus, const TopicOptions& opt);

// "2015" or "2015-Q3" in UTC.
std::string period_label(int64_t utc_seconds, Period period);

// Keyed by (group, period); empty bins do not appear.
std::map<std::pair<std::string, std::string>, TopicTable> topics_over_time(
    const Corpus& corpus, Period period, const TopicOptions& opt);

// Tab-separated `group, period, rank, ngram, score`, header included.
void write_topics(std::ostream& out,
                  const std::map<std::pair<std::string, std::string>, TopicTable>& tables);

}  // namespace d2s

#endif  // D2S_TOPICS_H_
