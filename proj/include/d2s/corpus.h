#ifndef D2S_CORPUS_H_
#define D2S_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "d2s/ontology.h"

namespace d2s {

enum class Sentiment { kPositive, kNegative, kNeutral };
enum class Emotion { kJoy, kSadness, kAnger, kLove, kFear, kThankfulness, kSurprise };
enum class SudLabel { kSUDP, kSUDA };

inline constexpr size_t kNumSentiments = 3;
inline constexpr size_t kNumEmotions = 7;
inline constexpr size_t kNumSudLabels = 2;

std::string_view sentiment_name(Sentiment s);
std::string_view emotion_name(Emotion e);
std::string_view sud_name(SudLabel s);
std::optional<Sentiment> parse_sentiment(std::string_view s);
std::optional<Emotion> parse_emotion(std::string_view s);
std::optional<SudLabel> parse_sud(std::string_view s);

struct Post {
  std::string id;
  std::string author;
  std::string source;
  int64_t timestamp = 0;  // UTC seconds
  std::string text;
  std::set<DrugCategory> drug_tags;
  std::optional<Sentiment> sentiment;
  std::optional<Emotion> emotion;
  std::optional<SudLabel> sud;

  bool operator==(const Post&) const = default;
};

// Ordered collection of posts with unique ids.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Post> posts);

  // Throws InputError on a duplicate id.
  void add(Post p);

  size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  const Post& operator[](size_t i) const { return posts_[i]; }
  Post& operator[](size_t i) { return posts_[i]; }
  const std::vector<Post>& posts() const { return posts_; }
  auto begin() const { return posts_.begin(); }
  auto end() const { return posts_.end(); }

  std::optional<size_t> index_of(std::string_view id) const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, size_t> index_;
};

// Corpus file: one post per line, tab-separated
//   id, author, source, ISO-8601 timestamp, sentiment|-, emotion|-, sud|-, text
// with tabs and newlines in text escaped. '#' lines are comments.
Corpus ingest(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in, std::string_view source = "<input>");
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Sets each post's drug_tags to the categories of all gazetteer matches.
Corpus tag_drugs(const Corpus& corpus, const Ontology& ontology);

// Replaces every gazetteer match with its category mask token; bytes outside
// matches are untouched.
std::string mask_entities(std::string_view text, const Ontology& ontology);
inline std::string mask_entities(const Post& post, const Ontology& ontology) {
  return mask_entities(post.text, ontology);
}

enum class StratifyBy { kDrugCategory, kSudLabel, kBoth };

// Draws min(per_stratum, |stratum|) posts per stratum without replacement.
// The drug stratum of a post is its first tag in category order; untagged
// (or unlabeled, for kSudLabel) posts belong to no stratum and are skipped.
// Output keeps corpus order.
Corpus stratified_sample(const Corpus& corpus, size_t per_stratum, StratifyBy by, uint64_t seed);

struct SplitSpec {
  int train = 75;
  int dev = 5;
  int test = 20;
  uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<size_t> train, dev, test;
};

struct Splits {
  Corpus train, dev, test;
};

// Per-stratum share targets: floor of each share, then leftovers by largest
// remainder with ties broken train > test > dev.
std::array<size_t, 3> split_counts(size_t n, const SplitSpec& spec);
// Label-stratified partition (unlabeled posts form their own stratum). Each
// stratum's part sizes are within one post of its exact share and the part
// totals equal split_counts(corpus.size()).
// Indices are ascending within each part.
SplitIndices split_indices(const Corpus& corpus, const SplitSpec& spec);
Splits split(const Corpus& corpus, const SplitSpec& spec);

enum class HistoryKey { kAuthor, kDrugStream };

struct PriorPost {
  size_t index;     // into the corpus
  int64_t delta_t;  // target.timestamp - prior.timestamp, > 0
};

struct PostHistory {
  size_t target;
  std::vector<PriorPost> prior;  // ascending by timestamp
  size_t window;
};

// Precomputed per-author / per-category timelines for history queries.
class HistoryIndex {
 public:
  HistoryIndex(const Corpus& corpus, HistoryKey key);

  // The `window` most recent posts strictly before the target that share its
  // author (or at least one drug tag), oldest first.
  PostHistory history(size_t target, size_t window) const;

 private:
  const Corpus* corpus_;
  HistoryKey key_;
  // Each timeline is sorted by (timestamp, corpus index).
  std::unordered_map<std::string, std::vector<size_t>> by_author_;
  std::array<std::vector<size_t>, 8> by_category_;
};

PostHistory history(const Corpus& corpus, size_t target, size_t window,
                    HistoryKey key = HistoryKey::kAuthor);

// ---------------------------------------------------------------------------
// Synthetic corpora with a planted labeling rule.

enum class SynthSignal { kHistoryDependent, kTextOnly };

struct SynthConfig {
  size_t n_authors = 100;
  size_t posts_per_author = 20;
  SynthSignal signal = SynthSignal::kHistoryDependent;
  double noise = 0.0;  // per-token probability that a planted cue is replaced by filler
  double keyword_rate = 0.6;
  size_t window = 10;
};

struct SynthManifest {
  SynthConfig config;
  uint64_t seed = 0;
  size_t posts = 0;
  size_t positives = 0;
  // Accuracy of the best classifier that sees only single-post features
  // (visible keyword presence and visible emotion cues), by enumeration.
  double single_post_ceiling = 1.0;
  std::string rule;

  void write(std::ostream& out) const;
};

struct SynthCorpus {
  Corpus corpus;
  SynthManifest manifest;
};

SynthCorpus synth_generate(const SynthConfig& config, uint64_t seed);

// Vocabulary the generator plants. Exposed for tests and oracles.
namespace synth_vocab {
const std::vector<std::string>& sud_keywords();
const std::vector<std::string>& emotion_cues(Emotion e);
const std::vector<std::string>& filler_words();
// Surface forms drawn for drug mentions, per category.
const std::vector<std::string>& drug_mentions(DrugCategory c);
bool is_negative(Emotion e);  // Sadness, Anger, Fear
}  // namespace synth_vocab

}  // namespace d2s

#endif  // D2S_CORPUS_H_
