#include "d2s/models.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "d2s/error.h"
#include "d2s/text.h"

namespace d2s {
namespace {

constexpr double kSecondsPerDay = 86400.0;

Vec concat(std::span<const double> a, std::span<const double> b) {
  Vec v(a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string dim_string(const ModelDims& d) {
  return std::to_string(d.d) + " " + std::to_string(d.d_h) + " " + std::to_string(d.h) + " " +
         std::to_string(d.attn) + " " + std::to_string(d.d_f) + " " + std::to_string(d.window);
}

ModelDims parse_dims(const std::string& s) {
  std::vector<std::string_view> f = split(s, ' ');
  if (f.size() != 6) throw InputError("checkpoint dims must list 6 values");
  ModelDims d;
  size_t* out[] = {&d.d, &d.d_h, &d.h, &d.attn, &d.d_f, &d.window};
  for (size_t i = 0; i < 6; ++i) *out[i] = std::stoul(std::string(f[i]));
  return d;
}

const std::string& require_meta(const Checkpoint& ck, const std::string& key) {
  const std::string* v = ck.get_meta(key);
  if (!v) throw InputError("checkpoint lacks metadata '" + key + "'");
  return *v;
}

PRF prf_from(const std::vector<int>& gold, const std::vector<int>& pred, size_t k) {
  return prf(confusion(gold, pred, k));
}

}  // namespace

size_t task_classes(Task t) {
  switch (t) {
    case Task::kSentiment: return kNumSentiments;
    case Task::kEmotion: return kNumEmotions;
    case Task::kSud: return kNumSudLabels;
  }
  return 0;
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kSentiment: return "sentiment";
    case Task::kEmotion: return "emotion";
    case Task::kSud: return "sud";
  }
  return "";
}

std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::kSentiment, Task::kEmotion, Task::kSud}) {
    if (task_name(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<int> task_label(const Post& p, Task t) {
  switch (t) {
    case Task::kSentiment:
      if (p.sentiment) return static_cast<int>(*p.sentiment);
      break;
    case Task::kEmotion:
      if (p.emotion) return static_cast<int>(*p.emotion);
      break;
    case Task::kSud:
      if (p.sud) return static_cast<int>(*p.sud);
      break;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Vocabulary and encoders

Vocabulary::Vocabulary() {
  add(std::string(kUnkToken));
  for (DrugCategory c : kAllCategories) add(mask_token(c));
  add(mask_token(std::nullopt));
}

void Vocabulary::add(const std::string& token) {
  if (ids_.emplace(token, static_cast<int>(tokens_.size())).second) tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, size_t min_count) {
  std::map<std::string, size_t> counts;
  for (const std::string& t : texts) {
    for (std::string& tok : encoder_tokens(t)) ++counts[std::move(tok)];
  }
  Vocabulary v;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) v.add(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  for (const std::string& t : tokens) v.add(t);
  if (v.tokens_.empty() || v.tokens_[0] != kUnkToken) {
    throw InputError("vocabulary must start with " + std::string(kUnkToken));
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const std::string& t : encoder_tokens(text)) ids.push_back(id(t));
  return ids;
}

std::string prepare_text(std::string_view text, const Ontology* mask_with) {
  return mask_with ? mask_entities(text, *mask_with) : std::string(text);
}

EncoderModel make_encoder(Vocabulary vocab, size_t dim, Rng& rng) {
  if (dim < 2) throw DimensionError("encoder dimension must be at least 2");
  EncoderModel e{std::move(vocab), Tensor({0, 0})};
  e.table = Tensor({e.vocab.size(), dim});
  init_uniform(e.table, rng, 0.1);
  return e;
}

// ---------------------------------------------------------------------------
// Heads

HeadModel make_head(Task task, const Vocabulary& vocab, const ModelDims& dims, double dropout,
                    Rng& rng) {
  HeadModel h;
  h.task = task;
  h.encoder = make_encoder(vocab, dims.d, rng);
  h.hidden = Dense(dims.d, dims.d_h);
  h.out = Dense(dims.d_h, task_classes(task));
  h.hidden.init(rng);
  h.out.init(rng);
  h.dropout = dropout;
  return h;
}

HeadModel::Trace HeadModel::forward(std::span<const int> ids, bool train, Rng* rng) const {
  Trace tr;
  tr.ids.assign(ids.begin(), ids.end());
  tr.enc = encoder.encode(ids);
  tr.pre = hidden.forward(tr.enc);
  tr.act = relu(tr.pre);
  DropoutResult d = d2s::dropout(tr.act, dropout, train, rng);
  tr.drop_mask = std::move(d.mask);
  tr.dropped = std::move(d.out);
  tr.logits = out.forward(tr.dropped);
  tr.probs = softmax(tr.logits);
  return tr;
}

void HeadModel::backward(const Trace& tr, std::span<const double> dlogits,
                         std::span<const double> dact) {
  Vec da(tr.act.size(), 0.0);
  if (!dlogits.empty()) {
    Vec dd = out.backward(tr.dropped, dlogits);
    da = dropout_backward(tr.drop_mask, dd);
  }
  for (size_t i = 0; i < dact.size(); ++i) da[i] += dact[i];
  Vec dpre = relu_backward(tr.pre, da);
  Vec denc = hidden.backward(tr.enc, dpre);
  embed_mean_backward(tr.ids, denc, encoder.table);
}

Vec HeadModel::features(std::span<const int> ids) const {
  return relu(hidden.forward(encoder.encode(ids)));
}

int HeadModel::predict(std::span<const int> ids) const {
  return argmax(out.forward(features(ids)));
}

std::vector<Tensor*> HeadModel::params() {
  return {&encoder.table, &hidden.w, &hidden.b, &out.w, &out.b};
}

Checkpoint HeadModel::to_checkpoint() const {
  Checkpoint ck;
  ck.set_meta("task", std::string(task_name(task)));
  ck.set_meta("dims", std::to_string(encoder.dim()) + " " + std::to_string(hidden.out()));
  ck.set_meta("dropout", format_double(dropout));
  ck.set_meta("masked", masked ? "1" : "0");
  ck.set_meta("vocab", join(encoder.vocab.tokens(), " "));
  ck.add("embed", encoder.table);
  ck.add("hidden.w", hidden.w);
  ck.add("hidden.b", hidden.b);
  ck.add("out.w", out.w);
  ck.add("out.b", out.b);
  return ck;
}

HeadModel HeadModel::from_checkpoint(const Checkpoint& ck) {
  HeadModel h;
  auto task = parse_task(require_meta(ck, "task"));
  if (!task) throw InputError("checkpoint has unknown task '" + require_meta(ck, "task") + "'");
  h.task = *task;
  std::vector<std::string_view> dims = split(require_meta(ck, "dims"), ' ');
  if (dims.size() != 2) throw InputError("head checkpoint dims must be 'D D_h'");
  size_t d = std::stoul(std::string(dims[0])), dh = std::stoul(std::string(dims[1]));
  std::vector<std::string> toks;
  for (std::string_view t : split(require_meta(ck, "vocab"), ' ')) toks.emplace_back(t);
  h.encoder.vocab = Vocabulary::from_tokens(toks);
  h.encoder.table = Tensor({h.encoder.vocab.size(), d});
  h.hidden = Dense(d, dh);
  h.out = Dense(dh, task_classes(h.task));
  h.dropout = std::stod(require_meta(ck, "dropout"));
  h.masked = require_meta(ck, "masked") == "1";
  ck.load_into("embed", h.encoder.table);
  ck.load_into("hidden.w", h.hidden.w);
  ck.load_into("hidden.b", h.hidden.b);
  ck.load_into("out.w", h.out.w);
  ck.load_into("out.b", h.out.b);
  return h;
}

namespace {

struct LabeledIds {
  std::vector<std::vector<int>> ids;
  std::vector<int> labels;
};

LabeledIds encode_split(const Corpus& c, Task task, const Vocabulary& vocab,
                        const Ontology* mask_with, const char* what) {
  LabeledIds out;
  for (const Post& p : c) {
    auto y = task_label(p, task);
    if (!y) {
      throw InputError(std::string(what) + " post '" + p.id + "' has no " +
                       std::string(task_name(task)) + " label");
    }
    out.ids.push_back(vocab.encode(prepare_text(p.text, mask_with)));
    out.labels.push_back(*y);
  }
  return out;
}

PRF head_prf(const HeadModel& m, const LabeledIds& data) {
  std::vector<int> pred;
  pred.reserve(data.ids.size());
  for (const auto& ids : data.ids) pred.push_back(m.predict(ids));
  return prf_from(data.labels, pred, task_classes(m.task));
}

double head_loss(const HeadModel& m, const LabeledIds& data) {
  double s = 0.0;
  for (size_t i = 0; i < data.ids.size(); ++i) {
    Vec p = softmax(m.out.forward(m.features(data.ids[i])));
    s += cross_entropy(p, static_cast<size_t>(data.labels[i]));
  }
  return data.ids.empty() ? 0.0 : s / static_cast<double>(data.ids.size());
}

}  // namespace

HeadTrainResult train_head(const Corpus& train, const Corpus& dev, Task task,
                           const TrainConfig& cfg, const ModelDims& dims,
                           const Ontology* mask_with) {
  if (train.empty()) throw InputError("train_head: empty training split");
  if (dev.empty()) throw InputError("train_head: empty dev split");
  if (cfg.batch == 0) throw InputError("train_head: batch size must be positive");
  std::vector<std::string> texts;
  for (const Post& p : train) texts.push_back(prepare_text(p.text, mask_with));
  Vocabulary vocab = Vocabulary::build(texts);
  LabeledIds tr = encode_split(train, task, vocab, mask_with, "training");
  LabeledIds dv = encode_split(dev, task, vocab, mask_with, "dev");

  const std::string tag(task_name(task));
  Rng init(cfg.seed, "head.init." + tag);
  HeadModel model = make_head(task, vocab, dims, cfg.dropout, init);
  model.masked = mask_with != nullptr;

  HeadTrainResult res{model, head_prf(model, dv), 0, {}};
  std::vector<Tensor*> params = model.params();
  AdamState adam;
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  std::vector<size_t> order(tr.ids.size());
  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle(cfg.seed, "head.shuffle." + tag, epoch);
    shuffle.shuffle(order);
    Rng drop(cfg.seed, "head.dropout." + tag, epoch);
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      size_t end = std::min(order.size(), start + cfg.batch);
      zero_grads(params);
      for (size_t k = start; k < end; ++k) {
        size_t i = order[k];
        HeadModel::Trace t = model.forward(tr.ids[i], true, &drop);
        Vec dl = softmax_xent_grad(t.probs, static_cast<size_t>(tr.labels[i]));
        model.backward(t, dl, {});
      }
      scale_grads(params, 1.0 / static_cast<double>(end - start));
      adam_step(params, adam, acfg);
    }
    if (cfg.track_loss) res.epoch_loss.push_back(head_loss(model, tr));
    PRF d = head_prf(model, dv);
    if (d.macro_f1 > res.dev.macro_f1) {
      res.dev = d;
      res.model = model;
      res.best_epoch = epoch;
    }
  }
  return res;
}

PRF evaluate_head(const HeadModel& head, const Corpus& corpus, const Ontology* mask_with) {
  if (corpus.empty()) throw InputError("evaluate_head: empty corpus");
  return head_prf(head, encode_split(corpus, head.task, head.encoder.vocab, mask_with, "eval"));
}

Vec extract_feature_vec(const Post& post, const HeadModel& head, bool masked,
                        const Ontology* ontology) {
  const Ontology* m = masked ? ontology : nullptr;
  return head.features(head.encoder.vocab.encode(prepare_text(post.text, m)));
}

// ---------------------------------------------------------------------------
// Temporal model

std::string_view variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "Full";
    case AblationVariant::kNoAttention: return "NoAttention";
    case AblationVariant::kNoEntityMasking: return "NoEntityMasking";
    case AblationVariant::kNoHistory: return "NoHistory";
  }
  return "";
}

std::optional<AblationVariant> parse_variant(std::string_view s) {
  std::string low = to_lower(s);
  for (AblationVariant v : kAllVariants) {
    if (to_lower(variant_name(v)) == low) return v;
  }
  return std::nullopt;
}

size_t TemporalSUDModel::context_dim() const {
  switch (variant) {
    case AblationVariant::kNoHistory: return 0;
    case AblationVariant::kNoAttention: return 2 * opt.dims.d_h;
    default: return 2 * opt.dims.h;
  }
}

std::vector<Tensor*> TemporalSUDModel::params() {
  std::vector<Tensor*> p = {&target.table};
  if (variant == AblationVariant::kFull || variant == AblationVariant::kNoEntityMasking) {
    for (Tensor* t : lstm.params()) p.push_back(t);
    for (Tensor* t : attn.params()) p.push_back(t);
  }
  for (Tensor* t : fuse.params()) p.push_back(t);
  for (Tensor* t : out.params()) p.push_back(t);
  if (opt.finetune_extractors && uses_history()) {
    for (Tensor* t : sentiment.params()) p.push_back(t);
    for (Tensor* t : emotion.params()) p.push_back(t);
  }
  return p;
}

TemporalSUDModel make_temporal(AblationVariant variant, const TemporalOptions& opt,
                               HeadModel sentiment, HeadModel emotion, Vocabulary target_vocab,
                               double dropout, Rng& rng) {
  const ModelDims& d = opt.dims;
  if (sentiment.hidden.out() != d.d_h || emotion.hidden.out() != d.d_h) {
    throw DimensionError("extractor feature width differs from D_h");
  }
  TemporalSUDModel m;
  m.variant = variant;
  m.opt = opt;
  m.sentiment = std::move(sentiment);
  m.emotion = std::move(emotion);
  m.target = make_encoder(std::move(target_vocab), d.d, rng);
  m.lstm = BiLstmParams(m.step_dim(), d.h);
  m.lstm.init(rng);
  m.attn = AttentionParams(2 * d.h, d.attn, opt.attention);
  m.attn.init(rng);
  m.fuse = Dense(m.context_dim() + d.d, d.d_f);
  m.fuse.init(rng);
  m.out = Dense(d.d_f, kNumSudLabels);
  m.out.init(rng);
  m.dropout = dropout;
  return m;
}

FeatureCache build_feature_cache(const Corpus& corpus, const TemporalSUDModel& model,
                                 const Ontology* ontology) {
  const Ontology* mask = model.masked() ? ontology : nullptr;
  FeatureCache c;
  const size_t n = corpus.size();
  c.e_s.resize(n);
  c.e_e.resize(n);
  c.s_ids.resize(n);
  c.e_ids.resize(n);
  c.target_ids.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::string text = prepare_text(corpus[i].text, mask);
    c.target_ids[i] = model.target.vocab.encode(text);
    if (!model.uses_history()) continue;
    c.s_ids[i] = model.sentiment.encoder.vocab.encode(text);
    c.e_ids[i] = model.emotion.encoder.vocab.encode(text);
    c.e_s[i] = model.sentiment.features(c.s_ids[i]);
    c.e_e[i] = model.emotion.features(c.e_ids[i]);
  }
  return c;
}

TemporalExample make_example(const Corpus& corpus, const PostHistory& h,
                             const TemporalSUDModel& model, const FeatureCache& cache) {
  TemporalExample ex;
  ex.target_ids = cache.target_ids[h.target];
  if (auto y = corpus[h.target].sud) ex.label = static_cast<int>(*y);
  if (!model.uses_history()) return ex;
  for (const PriorPost& p : h.prior) {
    ex.tau.push_back(model.opt.time_feature
                         ? std::log1p(static_cast<double>(p.delta_t) / kSecondsPerDay)
                         : 0.0);
    ex.e_s.push_back(cache.e_s[p.index]);
    ex.e_e.push_back(cache.e_e[p.index]);
    ex.s_ids.push_back(cache.s_ids[p.index]);
    ex.e_ids.push_back(cache.e_ids[p.index]);
  }
  return ex;
}

TemporalOutput temporal_forward(const TemporalExample& ex, const TemporalSUDModel& m, bool train,
                                Rng* rng) {
  TemporalOutput o;
  TemporalTrace& t = o.trace;
  const size_t dh = m.opt.dims.d_h;
  t.target_enc = m.target.encode(ex.target_ids);
  t.context.assign(m.context_dim(), 0.0);
  const size_t n = m.uses_history() ? ex.tau.size() : 0;
  if (n > 0) {
    t.steps.resize(n);
    for (size_t k = 0; k < n; ++k) {
      const Vec* es = &ex.e_s[k];
      const Vec* ee = &ex.e_e[k];
      if (m.opt.finetune_extractors) {
        t.s_tr.push_back(m.sentiment.forward(ex.s_ids[k], false, nullptr));
        t.e_tr.push_back(m.emotion.forward(ex.e_ids[k], false, nullptr));
        es = &t.s_tr.back().act;
        ee = &t.e_tr.back().act;
      }
      if (es->size() != dh || ee->size() != dh) throw DimensionError("history feature width");
      Vec x = concat(*es, *ee);
      x.push_back(ex.tau[k]);
      t.steps[k] = std::move(x);
    }
    if (m.variant == AblationVariant::kNoAttention) {
      for (const Vec& x : t.steps) {
        for (size_t j = 0; j < 2 * dh; ++j) t.context[j] += x[j];
      }
      for (double& v : t.context) v /= static_cast<double>(n);
    } else {
      t.lstm = bilstm_forward(t.steps, m.lstm);
      t.attn = attention_forward(t.lstm.out, m.attn);
      t.context = t.attn.context;
      o.attention = t.attn.alpha;
    }
  }
  t.fuse_in = concat(t.context, t.target_enc);
  t.fuse_pre = m.fuse.forward(t.fuse_in);
  t.fuse_act = relu(t.fuse_pre);
  DropoutResult d = dropout(t.fuse_act, m.dropout, train, rng);
  t.drop_mask = std::move(d.mask);
  t.dropped = std::move(d.out);
  t.logits = m.out.forward(t.dropped);
  o.probs = softmax(t.logits);
  return o;
}

double temporal_backward(const TemporalExample& ex, TemporalSUDModel& m, const TemporalOutput& o,
                         int label) {
  const TemporalTrace& t = o.trace;
  const size_t dh = m.opt.dims.d_h;
  double loss = cross_entropy(o.probs, static_cast<size_t>(label));
  Vec dlogits = softmax_xent_grad(o.probs, static_cast<size_t>(label));
  Vec ddrop = m.out.backward(t.dropped, dlogits);
  Vec dact = dropout_backward(t.drop_mask, ddrop);
  Vec dpre = relu_backward(t.fuse_pre, dact);
  Vec din = m.fuse.backward(t.fuse_in, dpre);
  const size_t cd = m.context_dim();
  embed_mean_backward(ex.target_ids, std::span<const double>(din).subspan(cd), m.target.table);
  const size_t n = t.steps.size();
  if (n == 0) return loss;
  std::span<const double> dctx = std::span<const double>(din).first(cd);
  std::vector<Vec> dsteps;
  if (m.variant == AblationVariant::kNoAttention) {
    dsteps.assign(n, Vec(m.step_dim(), 0.0));
    for (size_t k = 0; k < n; ++k) {
      for (size_t j = 0; j < 2 * dh; ++j) dsteps[k][j] = dctx[j] / static_cast<double>(n);
    }
  } else {
    std::vector<Vec> dstates = attention_backward(t.attn, m.attn, dctx);
    dsteps = bilstm_backward(t.lstm, m.lstm, dstates);
  }
  if (m.opt.finetune_extractors) {
    for (size_t k = 0; k < n; ++k) {
      std::span<const double> ds(dsteps[k]);
      m.sentiment.backward(t.s_tr[k], {}, ds.first(dh));
      m.emotion.backward(t.e_tr[k], {}, ds.subspan(dh, dh));
    }
  }
  return loss;
}

TemporalOutput temporal_forward(const Corpus& corpus, const PostHistory& h,
                                const TemporalSUDModel& model, const Ontology* ontology) {
  const Ontology* mask = model.masked() ? ontology : nullptr;
  TemporalExample ex;
  ex.target_ids = model.target.vocab.encode(prepare_text(corpus[h.target].text, mask));
  if (model.uses_history()) {
    for (const PriorPost& p : h.prior) {
      std::string text = prepare_text(corpus[p.index].text, mask);
      ex.tau.push_back(model.opt.time_feature
                           ? std::log1p(static_cast<double>(p.delta_t) / kSecondsPerDay)
                           : 0.0);
      ex.s_ids.push_back(model.sentiment.encoder.vocab.encode(text));
      ex.e_ids.push_back(model.emotion.encoder.vocab.encode(text));
      ex.e_s.push_back(model.sentiment.features(ex.s_ids.back()));
      ex.e_e.push_back(model.emotion.features(ex.e_ids.back()));
    }
  }
  return temporal_forward(ex, model, false, nullptr);
}

Checkpoint TemporalSUDModel::to_checkpoint() const {
  Checkpoint ck;
  ck.set_meta("task", "temporal");
  ck.set_meta("variant", std::string(variant_name(variant)));
  ck.set_meta("dims", dim_string(opt.dims));
  ck.set_meta("time_feature", opt.time_feature ? "1" : "0");
  ck.set_meta("history_key", opt.history_key == HistoryKey::kAuthor ? "author" : "drug_stream");
  ck.set_meta("attention", opt.attention == AttentionKind::kAdditive ? "additive" : "dot");
  ck.set_meta("finetune_extractors", opt.finetune_extractors ? "1" : "0");
  ck.set_meta("dropout", format_double(dropout));
  ck.set_meta("vocab", join(target.vocab.tokens(), " "));
  for (const auto& [prefix, head] : {std::pair<std::string, const HeadModel*>{"sentiment", &sentiment},
                                     {"emotion", &emotion}}) {
    Checkpoint h = head->to_checkpoint();
    for (const auto& [k, v] : h.meta) ck.set_meta(prefix + "." + k, v);
    for (const auto& [name, t] : h.sections) ck.add(prefix + "." + name, t);
  }
  ck.add("target.embed", target.table);
  ck.add("lstm.fwd.wx", lstm.fwd.wx);
  ck.add("lstm.fwd.wh", lstm.fwd.wh);
  ck.add("lstm.fwd.b", lstm.fwd.b);
  ck.add("lstm.bwd.wx", lstm.bwd.wx);
  ck.add("lstm.bwd.wh", lstm.bwd.wh);
  ck.add("lstm.bwd.b", lstm.bwd.b);
  if (attn.kind == AttentionKind::kAdditive) ck.add("attn.w", attn.w);
  ck.add("attn.v", attn.v);
  ck.add("fuse.w", fuse.w);
  ck.add("fuse.b", fuse.b);
  ck.add("out.w", out.w);
  ck.add("out.b", out.b);
  return ck;
}

TemporalSUDModel TemporalSUDModel::from_checkpoint(const Checkpoint& ck) {
  if (require_meta(ck, "task") != "temporal") {
    throw InputError("checkpoint task is '" + require_meta(ck, "task") + "', expected temporal");
  }
  auto variant = parse_variant(require_meta(ck, "variant"));
  if (!variant) throw InputError("checkpoint has unknown variant");
  TemporalOptions opt;
  opt.dims = parse_dims(require_meta(ck, "dims"));
  opt.time_feature = require_meta(ck, "time_feature") == "1";
  opt.history_key =
      require_meta(ck, "history_key") == "author" ? HistoryKey::kAuthor : HistoryKey::kDrugStream;
  opt.attention =
      require_meta(ck, "attention") == "dot" ? AttentionKind::kDot : AttentionKind::kAdditive;
  opt.finetune_extractors = require_meta(ck, "finetune_extractors") == "1";
  auto sub = [&](const std::string& prefix) {
    Checkpoint h;
    for (const auto& [k, v] : ck.meta) {
      if (k.rfind(prefix + ".", 0) == 0) h.set_meta(k.substr(prefix.size() + 1), v);
    }
    for (const auto& [name, t] : ck.sections) {
      if (name.rfind(prefix + ".", 0) == 0) h.sections.emplace_back(name.substr(prefix.size() + 1), t);
    }
    return HeadModel::from_checkpoint(h);
  };
  std::vector<std::string> toks;
  for (std::string_view t : split(require_meta(ck, "vocab"), ' ')) toks.emplace_back(t);
  Rng dummy(0, "checkpoint");
  TemporalSUDModel m = make_temporal(*variant, opt, sub("sentiment"), sub("emotion"),
                                     Vocabulary::from_tokens(toks),
                                     std::stod(require_meta(ck, "dropout")), dummy);
  ck.load_into("target.embed", m.target.table);
  ck.load_into("lstm.fwd.wx", m.lstm.fwd.wx);
  ck.load_into("lstm.fwd.wh", m.lstm.fwd.wh);
  ck.load_into("lstm.fwd.b", m.lstm.fwd.b);
  ck.load_into("lstm.bwd.wx", m.lstm.bwd.wx);
  ck.load_into("lstm.bwd.wh", m.lstm.bwd.wh);
  ck.load_into("lstm.bwd.b", m.lstm.bwd.b);
  if (m.attn.kind == AttentionKind::kAdditive) ck.load_into("attn.w", m.attn.w);
  ck.load_into("attn.v", m.attn.v);
  ck.load_into("fuse.w", m.fuse.w);
  ck.load_into("fuse.b", m.fuse.b);
  ck.load_into("out.w", m.out.w);
  ck.load_into("out.b", m.out.b);
  return m;
}

// ---------------------------------------------------------------------------
// Training

namespace {

Corpus subset(const Corpus& c, const std::vector<size_t>& idx) {
  std::vector<Post> v;
  v.reserve(idx.size());
  for (size_t i : idx) v.push_back(c[i]);
  return Corpus(std::move(v));
}

void require_sud_labels(const Corpus& corpus) {
  if (corpus.empty()) throw InputError("temporal_train: empty corpus");
  for (const Post& p : corpus) {
    if (!p.sud) throw InputError("temporal_train: post '" + p.id + "' has no sud label");
  }
}

SplitIndices checked_split(const Corpus& corpus, const TemporalTrainConfig& cfg) {
  SplitIndices idx = split_indices(corpus, cfg.split);
  if (idx.train.empty() || idx.dev.empty() || idx.test.empty()) {
    throw InputError("temporal_train: a split part is empty (corpus too small for the ratios)");
  }
  return idx;
}

std::vector<TemporalExample> build_examples(const Corpus& corpus, const TemporalSUDModel& m,
                                            const Ontology* ontology) {
  FeatureCache cache = build_feature_cache(corpus, m, ontology);
  HistoryIndex hist(corpus, m.opt.history_key);
  std::vector<TemporalExample> ex;
  ex.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    ex.push_back(make_example(corpus, hist.history(i, m.opt.dims.window), m, cache));
  }
  return ex;
}

PRF temporal_prf(const TemporalSUDModel& m, const std::vector<TemporalExample>& ex,
                 const std::vector<size_t>& idx) {
  std::vector<int> gold, pred;
  for (size_t i : idx) {
    gold.push_back(ex[i].label);
    pred.push_back(argmax(temporal_forward(ex[i], m).probs));
  }
  return prf_from(gold, pred, kNumSudLabels);
}

}  // namespace

Extractors train_extractors(const Corpus& train, const Corpus& dev, const TrainConfig& cfg,
                            const ModelDims& dims, const Ontology* mask_with) {
  HeadTrainResult s = train_head(train, dev, Task::kSentiment, cfg, dims, mask_with);
  HeadTrainResult e = train_head(train, dev, Task::kEmotion, cfg, dims, mask_with);
  return {std::move(s.model), std::move(e.model), s.dev, e.dev};
}

TemporalTrainResult temporal_train(const Corpus& corpus, const Ontology& ontology,
                                   AblationVariant variant, const TemporalTrainConfig& cfg,
                                   const Extractors* extractors) {
  require_sud_labels(corpus);
  const TrainConfig& tc = cfg.temporal;
  if (tc.batch == 0) throw InputError("temporal_train: batch size must be positive");
  SplitIndices idx = checked_split(corpus, cfg);
  const bool masked = variant != AblationVariant::kNoEntityMasking;
  const Ontology* mask = masked ? &ontology : nullptr;
  Corpus train = subset(corpus, idx.train);
  Corpus dev = subset(corpus, idx.dev);

  Extractors own;
  if (!extractors) {
    if (variant == AblationVariant::kNoHistory) {
      // Unused by this variant; untrained placeholders keep the model shape.
      Rng r(cfg.heads.seed, "head.placeholder");
      own.sentiment = make_head(Task::kSentiment, Vocabulary(), cfg.opt.dims, cfg.heads.dropout, r);
      own.emotion = make_head(Task::kEmotion, Vocabulary(), cfg.opt.dims, cfg.heads.dropout, r);
    } else {
      own = train_extractors(train, dev, cfg.heads, cfg.opt.dims, mask);
    }
    extractors = &own;
  }

  std::vector<std::string> texts;
  for (const Post& p : train) texts.push_back(prepare_text(p.text, mask));
  Rng init(tc.seed, "temporal.init", static_cast<uint64_t>(variant));
  TemporalSUDModel model =
      make_temporal(variant, cfg.opt, extractors->sentiment, extractors->emotion,
                    Vocabulary::build(texts), tc.dropout, init);
  std::vector<TemporalExample> ex = build_examples(corpus, model, &ontology);

  TemporalTrainResult res{model, temporal_prf(model, ex, idx.dev), {}, 0, {}};
  std::vector<Tensor*> params = model.params();
  AdamState adam;
  AdamConfig acfg;
  acfg.lr = tc.lr;
  std::vector<size_t> order = idx.train;
  for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    order = idx.train;
    Rng shuffle(tc.seed, "temporal.shuffle", epoch);
    shuffle.shuffle(order);
    Rng drop(tc.seed, "temporal.dropout", epoch);
    for (size_t start = 0; start < order.size(); start += tc.batch) {
      size_t end = std::min(order.size(), start + tc.batch);
      zero_grads(params);
      for (size_t k = start; k < end; ++k) {
        const TemporalExample& e = ex[order[k]];
        TemporalOutput o = temporal_forward(e, model, true, &drop);
        temporal_backward(e, model, o, e.label);
      }
      scale_grads(params, 1.0 / static_cast<double>(end - start));
      adam_step(params, adam, acfg);
    }
    if (tc.track_loss) {
      double s = 0.0;
      for (size_t i : idx.train) {
        s += cross_entropy(temporal_forward(ex[i], model).probs, static_cast<size_t>(ex[i].label));
      }
      res.epoch_loss.push_back(s / static_cast<double>(idx.train.size()));
    }
    PRF d = temporal_prf(model, ex, idx.dev);
    if (d.macro_f1 > res.dev.macro_f1) {
      res.dev = d;
      res.model = model;
      res.best_epoch = epoch;
    }
  }
  res.test = temporal_prf(res.model, ex, idx.test);
  return res;
}

PRF evaluate_temporal(const TemporalSUDModel& model, const Corpus& corpus,
                      const std::vector<size_t>& indices, const Ontology* ontology) {
  require_sud_labels(corpus);
  if (indices.empty()) throw InputError("evaluate_temporal: no posts to score");
  std::vector<TemporalExample> ex = build_examples(corpus, model, ontology);
  return temporal_prf(model, ex, indices);
}

// ---------------------------------------------------------------------------
// Ablation

const VariantSummary* AblationReport::find(AblationVariant v) const {
  for (const VariantSummary& s : summary) {
    if (s.variant == v) return &s;
  }
  return nullptr;
}

void AblationReport::write_runs(std::ostream& out) const {
  out << "variant\trun_seed\tprecision\trecall\tmacro_f1\n";
  for (const AblationRun& r : runs) {
    out << variant_name(r.variant) << '\t' << r.seed << '\t' << format_fixed(r.test.macro_precision, 6)
        << '\t' << format_fixed(r.test.macro_recall, 6) << '\t' << format_fixed(r.test.macro_f1, 6)
        << '\n';
  }
}

void AblationReport::write_summary(std::ostream& out) const {
  out << "variant\tprecision\trecall\tmacro_f1\tdelta_precision\tdelta_recall\tdelta_f1\n";
  for (const VariantSummary& s : summary) {
    out << variant_name(s.variant) << '\t' << format_fixed(s.precision, 6) << '\t'
        << format_fixed(s.recall, 6) << '\t' << format_fixed(s.macro_f1, 6) << '\t'
        << format_fixed(s.delta_precision, 6) << '\t' << format_fixed(s.delta_recall, 6) << '\t'
        << format_fixed(s.delta_f1, 6) << '\n';
  }
}

AblationReport ablation_report(const Corpus& corpus, const Ontology& ontology,
                               const TemporalTrainConfig& cfg, const std::vector<uint64_t>& seeds,
                               const std::vector<AblationVariant>& variants, size_t jobs) {
  if (seeds.empty()) throw InputError("ablation: at least one run is required");
  require_sud_labels(corpus);
  auto one_seed = [&](uint64_t seed) {
    TemporalTrainConfig c = cfg;
    c.heads.seed = seed;
    c.temporal.seed = seed;
    c.split.seed = seed;
    SplitIndices idx = checked_split(corpus, c);
    Corpus train = subset(corpus, idx.train);
    Corpus dev = subset(corpus, idx.dev);
    // Extractors depend only on the seed and the masking mode.
    std::optional<Extractors> masked_ex, raw_ex;
    std::vector<AblationRun> runs;
    for (AblationVariant v : variants) {
      const Extractors* ex = nullptr;
      if (v == AblationVariant::kFull || v == AblationVariant::kNoAttention) {
        if (!masked_ex) masked_ex = train_extractors(train, dev, c.heads, c.opt.dims, &ontology);
        ex = &*masked_ex;
      } else if (v == AblationVariant::kNoEntityMasking) {
        if (!raw_ex) raw_ex = train_extractors(train, dev, c.heads, c.opt.dims, nullptr);
        ex = &*raw_ex;
      }
      TemporalTrainResult r = temporal_train(corpus, ontology, v, c, ex);
      runs.push_back({v, seed, r.test});
    }
    return runs;
  };
  std::vector<std::vector<AblationRun>> per_seed(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        per_seed[i] = one_seed(seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  size_t n_threads = std::clamp<size_t>(jobs, 1, seeds.size());
  std::vector<std::thread> pool;
  for (size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  AblationReport rep;
  for (auto& runs : per_seed) rep.runs.insert(rep.runs.end(), runs.begin(), runs.end());
  std::map<AblationVariant, VariantSummary> med;
  for (AblationVariant v : variants) {
    std::vector<double> p, r, f;
    for (const AblationRun& run : rep.runs) {
      if (run.variant != v) continue;
      p.push_back(run.test.macro_precision);
      r.push_back(run.test.macro_recall);
      f.push_back(run.test.macro_f1);
    }
    med[v] = {v, median(p), median(r), median(f), 0, 0, 0};
  }
  auto full = med.find(AblationVariant::kFull);
  for (AblationVariant v : variants) {
    VariantSummary& s = med[v];
    if (full != med.end()) {
      s.delta_precision = full->second.precision - s.precision;
      s.delta_recall = full->second.recall - s.recall;
      s.delta_f1 = full->second.macro_f1 - s.macro_f1;
    }
    rep.summary.push_back(s);
  }
  return rep;
}

}  // namespace d2s
