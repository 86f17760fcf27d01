#ifndef D2S_SENTIMENT_H_
#define D2S_SENTIMENT_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "d2s/corpus.h"

namespace d2s {

struct SentimentConstants {
  double booster = 0.293;
  double negation = -0.74;
  double caps = 0.733;
  double exclamation = 0.292;
  int max_exclamations = 3;
  double alpha = 15.0;
  double threshold = 0.05;
  std::array<double, 3> damping = {1.0, 0.95, 0.90};  // by distance 1, 2, 3
};

enum class Pooling {
  kSumNormalize,  // VADER: normalize the summed valence
  kAverage,       // normalize the mean adjusted valence of the valence tokens
};

struct SentimentLexicon {
  std::map<std::string, double, std::less<>> valence;   // [-4, 4]
  std::map<std::string, double, std::less<>> boosters;  // +-0.293
  std::set<std::string, std::less<>> negations;

  // Lines `token<TAB>valence` until a `[boosters]` or `[negations]` header.
  // Booster lines carry a signed 0.293; negation lines hold just the token.
  static SentimentLexicon load(const std::filesystem::path& path);
  static SentimentLexicon parse(std::istream& in, std::string_view source = "<input>");

  // Throws InputError if a value is out of range (parse() checks each line).
  void validate(const SentimentConstants& k = {}) const;
};

struct SentimentScore {
  double sum = 0.0;  // pooled valence incl. exclamation emphasis
  double compound = 0.0;
  std::vector<std::pair<std::string, double>> token_scores;  // valence tokens only
  Sentiment label = Sentiment::kNeutral;
};

struct SentimentOptions {
  SentimentConstants constants;
  Pooling pooling = Pooling::kSumNormalize;
};

// Whitespace chunks that are lexicon keys (emoticons such as ":)") are kept
// whole; other chunks split into runs of letters, digits and apostrophes.
std::vector<std::string> sentiment_tokens(std::string_view text, const SentimentLexicon& lex);

SentimentScore score_post(std::string_view text, const SentimentLexicon& lex,
                          const SentimentOptions& opt = {});

Sentiment sentiment_label(double compound, double threshold = 0.05);

// Overwrites every post's sentiment label.
Corpus label_corpus(const Corpus& corpus, const SentimentLexicon& lex,
                    const SentimentOptions& opt = {});

}  // namespace d2s

#endif  // D2S_SENTIMENT_H_
