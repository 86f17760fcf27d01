#ifndef D2S_BASELINES_H_
#define D2S_BASELINES_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2s/corpus.h"
#include "d2s/eval_stats.h"
#include "d2s/models.h"

namespace d2s {

enum class Baseline { kLrPosTfidf, kHRnn, kHLstm };
inline constexpr std::array<Baseline, 3> kAllBaselines = {Baseline::kLrPosTfidf, Baseline::kHRnn,
                                                          Baseline::kHLstm};
std::string_view baseline_name(Baseline b);  // LR_POS_TFIDF, H_RNN, H_LSTM
std::optional<Baseline> parse_baseline(std::string_view s);

// Coarse part-of-speech buckets from closed-class lists and suffix rules.
enum class PosBucket { kNoun, kVerb, kAdjective, kAdverb, kFunction, kOther };
inline constexpr size_t kNumPosBuckets = 6;
PosBucket pos_bucket(std::string_view word);
// Bucket counts divided by the token count (all zero for empty text).
std::array<double, kNumPosBuckets> pos_features(const std::vector<std::string>& tokens);

// Character n-grams (3..5) of "<word>", fastText style.
std::vector<std::string> char_ngrams(std::string_view word);

struct BaselineConfig {
  TrainConfig train{30, 1e-2, 32, 0.0, 0, false};  // H_RNN and H_LSTM use Adam
  double lr_sgd = 4.0;  // LR_POS_TFIDF uses plain gradient descent
  ModelDims dims;
  SplitSpec split;
  HistoryKey history_key = HistoryKey::kAuthor;
  size_t hash_buckets = 4096;  // H_RNN subword table rows
};

struct BaselineResult {
  PRF train, dev, test;  // at the selected epoch
  size_t best_epoch = 0;
};

// Splits the corpus, trains on train, picks the best dev epoch and scores
// test. Text is masked first when `mask_with` is given. Throws InputError on
// unlabeled posts or an empty split part.
BaselineResult run_baseline(const Corpus& corpus, const Ontology* mask_with, Baseline baseline,
                            const BaselineConfig& cfg);

}  // namespace d2s

#endif  // D2S_BASELINES_H_
