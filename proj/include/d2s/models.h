#ifndef D2S_MODELS_H_
#define D2S_MODELS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "d2s/corpus.h"
#include "d2s/eval_stats.h"
#include "d2s/nn.h"
#include "d2s/ontology.h"

namespace d2s {

enum class Task { kSentiment, kEmotion, kSud };
size_t task_classes(Task t);
std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view s);
// The post's label for the task as a class index, if present.
std::optional<int> task_label(const Post& p, Task t);

// Token -> id. Id 0 is the out-of-vocabulary token; every category mask token
// and [DRUG_UNK] are always present.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  static Vocabulary build(const std::vector<std::string>& texts, size_t min_count = 1);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int id(std::string_view token) const;
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<int> encode(std::string_view text) const;

 private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Masking front end shared by every encoder: masked text when an ontology is
// given, raw text otherwise.
std::string prepare_text(std::string_view text, const Ontology* mask_with);

struct EncoderModel {
  Vocabulary vocab;
  Tensor table;  // [V, D]

  size_t dim() const { return table.cols(); }
  Vec encode(std::span<const int> ids) const { return embed_mean(ids, table); }
};

EncoderModel make_encoder(Vocabulary vocab, size_t dim, Rng& rng);

struct ModelDims {
  size_t d = 32;      // encoder width
  size_t d_h = 32;    // head hidden width (feature vector size)
  size_t h = 16;      // LSTM hidden per direction
  size_t attn = 16;   // additive attention width
  size_t d_f = 32;    // fusion dense width
  size_t window = 10; // history length L
};

struct TrainConfig {
  size_t epochs = 10;
  double lr = 1e-3;
  size_t batch = 32;
  double dropout = 0.2;
  uint64_t seed = 0;
  // Record the eval-mode training loss after every epoch.
  bool track_loss = true;
};

// embed_mean -> Dense(D, D_h) + ReLU -> dropout -> Dense(D_h, K).
struct HeadModel {
  Task task = Task::kSud;
  EncoderModel encoder;
  Dense hidden, out;
  double dropout = 0.2;
  bool masked = true;  // trained on masked text

  struct Trace {
    std::vector<int> ids;
    Vec enc, pre, act, drop_mask, dropped, logits, probs;
  };

  Trace forward(std::span<const int> ids, bool train, Rng* rng) const;
  // Accumulates gradients from d loss / d logits and d loss / d act (the
  // latter may be empty). Returns nothing; encoder rows get their share.
  void backward(const Trace& tr, std::span<const double> dlogits, std::span<const double> dact);
  Vec features(std::span<const int> ids) const;  // penultimate, eval mode
  int predict(std::span<const int> ids) const;
  std::vector<Tensor*> params();

  Checkpoint to_checkpoint() const;
  static HeadModel from_checkpoint(const Checkpoint& ck);
};

HeadModel make_head(Task task, const Vocabulary& vocab, const ModelDims& dims, double dropout,
                    Rng& rng);

struct HeadTrainResult {
  HeadModel model;
  PRF dev;
  size_t best_epoch = 0;  // 0 = initialization
  std::vector<double> epoch_loss;
};

// Mini-batch Adam on mean cross-entropy; keeps the parameters with the best
// dev macro-F1 (earliest on ties). Throws InputError on unlabeled posts or
// an empty split.
HeadTrainResult train_head(const Corpus& train, const Corpus& dev, Task task,
                           const TrainConfig& cfg, const ModelDims& dims,
                           const Ontology* mask_with);

PRF evaluate_head(const HeadModel& head, const Corpus& corpus, const Ontology* mask_with);

// Penultimate activation for the post, masking its text first when `masked`.
Vec extract_feature_vec(const Post& post, const HeadModel& head, bool masked,
                        const Ontology* ontology);

// ---------------------------------------------------------------------------
// Temporal SUD model

enum class AblationVariant { kFull, kNoAttention, kNoEntityMasking, kNoHistory };
inline constexpr std::array<AblationVariant, 4> kAllVariants = {
    AblationVariant::kFull, AblationVariant::kNoAttention, AblationVariant::kNoEntityMasking,
    AblationVariant::kNoHistory};
std::string_view variant_name(AblationVariant v);
std::optional<AblationVariant> parse_variant(std::string_view s);

struct TemporalOptions {
  ModelDims dims;
  bool time_feature = true;
  HistoryKey history_key = HistoryKey::kAuthor;
  AttentionKind attention = AttentionKind::kAdditive;
  bool finetune_extractors = false;  // default: heads frozen
};

struct TemporalSUDModel {
  AblationVariant variant = AblationVariant::kFull;
  TemporalOptions opt;
  HeadModel sentiment, emotion;
  EncoderModel target;
  BiLstmParams lstm;
  AttentionParams attn;
  Dense fuse, out;
  double dropout = 0.2;

  bool masked() const { return variant != AblationVariant::kNoEntityMasking; }
  bool uses_history() const { return variant != AblationVariant::kNoHistory; }
  size_t step_dim() const { return 2 * opt.dims.d_h + 1; }
  size_t context_dim() const;
  std::vector<Tensor*> params();  // trainable parameters

  Checkpoint to_checkpoint() const;
  static TemporalSUDModel from_checkpoint(const Checkpoint& ck);
};

TemporalSUDModel make_temporal(AblationVariant variant, const TemporalOptions& opt,
                               HeadModel sentiment, HeadModel emotion, Vocabulary target_vocab,
                               double dropout, Rng& rng);

// One model input: the target post's ids plus one entry per prior post.
struct TemporalExample {
  std::vector<int> target_ids;
  std::vector<double> tau;                       // per step
  std::vector<Vec> e_s, e_e;                     // cached extractor features
  std::vector<std::vector<int>> s_ids, e_ids;    // extractor inputs (fine-tuning)
  int label = -1;                                // 0 SUDP, 1 SUDA
};

// Per-post extractor features, computed once per (model, corpus).
struct FeatureCache {
  std::vector<Vec> e_s, e_e;
  std::vector<std::vector<int>> s_ids, e_ids, target_ids;
};

FeatureCache build_feature_cache(const Corpus& corpus, const TemporalSUDModel& model,
                                 const Ontology* ontology);
TemporalExample make_example(const Corpus& corpus, const PostHistory& h,
                             const TemporalSUDModel& model, const FeatureCache& cache);

struct TemporalTrace {
  std::vector<Vec> steps;
  BiLstmTrace lstm;
  AttentionTrace attn;
  std::vector<HeadModel::Trace> s_tr, e_tr;  // fine-tuning only
  Vec target_enc, context, fuse_in, fuse_pre, fuse_act, drop_mask, dropped, logits;
};

struct TemporalOutput {
  Vec probs;      // {SUDP, SUDA}
  Vec attention;  // per history step; empty without history
  TemporalTrace trace;
};

TemporalOutput temporal_forward(const TemporalExample& ex, const TemporalSUDModel& model,
                                bool train = false, Rng* rng = nullptr);
// Backpropagates cross-entropy against `label`; accumulates gradients and
// returns the loss.
double temporal_backward(const TemporalExample& ex, TemporalSUDModel& model,
                         const TemporalOutput& out, int label);

// Convenience path from raw posts: masks, encodes and runs the model.
TemporalOutput temporal_forward(const Corpus& corpus, const PostHistory& h,
                                const TemporalSUDModel& model, const Ontology* ontology);

struct TemporalTrainConfig {
  TrainConfig heads;
  TrainConfig temporal{10, 1e-3, 64, 0.2, 0, true};
  TemporalOptions opt;
  SplitSpec split;
};

struct Extractors {
  HeadModel sentiment, emotion;
  PRF sentiment_dev, emotion_dev;
};

Extractors train_extractors(const Corpus& train, const Corpus& dev, const TrainConfig& cfg,
                            const ModelDims& dims, const Ontology* mask_with);

struct TemporalTrainResult {
  TemporalSUDModel model;
  PRF dev, test;
  size_t best_epoch = 0;
  std::vector<double> epoch_loss;
};

// Splits, trains the extractors (unless given), then the temporal model, and
// scores the test split. `extractors` must match the variant's masking.
TemporalTrainResult temporal_train(const Corpus& corpus, const Ontology& ontology,
                                   AblationVariant variant, const TemporalTrainConfig& cfg,
                                   const Extractors* extractors = nullptr);

PRF evaluate_temporal(const TemporalSUDModel& model, const Corpus& corpus,
                      const std::vector<size_t>& indices, const Ontology* ontology);

struct AblationRun {
  AblationVariant variant;
  uint64_t seed;
  PRF test;
};

struct VariantSummary {
  AblationVariant variant;
  double precision, recall, macro_f1;  // medians
  double delta_precision, delta_recall, delta_f1;  // Full - variant
};

struct AblationReport {
  std::vector<AblationRun> runs;
  std::vector<VariantSummary> summary;

  const VariantSummary* find(AblationVariant v) const;
  void write_runs(std::ostream& out) const;     // variant, run_seed, precision, recall, macro_f1
  void write_summary(std::ostream& out) const;  // medians and deltas
};

// Every variant once per seed; seed s sets the split and all initializations.
// Seeds are spread over `jobs` threads; results do not depend on it.
AblationReport ablation_report(const Corpus& corpus, const Ontology& ontology,
                               const TemporalTrainConfig& cfg, const std::vector<uint64_t>& seeds,
                               const std::vector<AblationVariant>& variants = {
                                   kAllVariants.begin(), kAllVariants.end()},
                               size_t jobs = 1);

}  // namespace d2s

#endif  // D2S_MODELS_H_
