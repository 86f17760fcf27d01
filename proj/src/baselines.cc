#include "d2s/baselines.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>

#include "d2s/error.h"
#include "d2s/nn.h"
#include "d2s/rng.h"
#include "d2s/text.h"
#include "d2s/topics.h"

namespace d2s {

std::string_view baseline_name(Baseline b) {
  switch (b) {
    case Baseline::kLrPosTfidf: return "LR_POS_TFIDF";
    case Baseline::kHRnn: return "H_RNN";
    case Baseline::kHLstm: return "H_LSTM";
  }
  return "";
}

std::optional<Baseline> parse_baseline(std::string_view s) {
  std::string up = to_upper(s);
  std::replace(up.begin(), up.end(), '-', '_');
  for (Baseline b : kAllBaselines) {
    if (baseline_name(b) == up) return b;
  }
  if (up == "LR") return Baseline::kLrPosTfidf;
  return std::nullopt;
}

namespace {

const std::set<std::string_view>& function_words() {
  static const std::set<std::string_view> w = {
      "a",    "an",    "the",   "and",   "or",    "but",  "if",    "of",   "in",    "on",
      "at",   "to",    "for",   "from",  "with",  "by",   "as",    "into", "about", "over",
      "i",    "you",   "he",    "she",   "it",    "we",   "they",  "me",   "him",   "her",
      "us",   "them",  "my",    "your",  "his",   "its",  "our",   "their", "this", "that",
      "these", "those", "what", "which", "who",   "whom", "there", "here", "than",  "so",
      "not",  "no",    "nor",   "because", "while", "until", "since", "after", "before"};
  return w;
}

const std::set<std::string_view>& aux_verbs() {
  static const std::set<std::string_view> w = {
      "is",   "am",   "are",    "was",   "were",  "be",    "been", "being", "have", "has",
      "had",  "do",   "does",   "did",   "will",  "would", "can",  "could", "shall", "should",
      "may",  "might", "must",  "get",   "got",   "go",    "went", "take",  "took", "feel",
      "felt", "need", "want",   "make",  "made",  "know",  "think", "say",  "said", "use"};
  return w;
}

const std::set<std::string_view>& adverbs() {
  static const std::set<std::string_view> w = {"very", "really", "too", "just", "never", "always",
                                               "still", "again", "now", "then", "soon", "often",
                                               "almost", "quite", "already", "even", "ever"};
  return w;
}

bool ends_with(std::string_view w, std::string_view suf) {
  return w.size() > suf.size() + 1 && w.substr(w.size() - suf.size()) == suf;
}

}  // namespace

PosBucket pos_bucket(std::string_view word) {
  std::string w = to_lower(word);
  if (w.empty()) return PosBucket::kOther;
  if (!std::any_of(w.begin(), w.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) {
    return PosBucket::kOther;
  }
  if (is_mask_token(word)) return PosBucket::kNoun;
  if (function_words().count(w)) return PosBucket::kFunction;
  if (aux_verbs().count(w)) return PosBucket::kVerb;
  if (adverbs().count(w) || ends_with(w, "ly")) return PosBucket::kAdverb;
  for (std::string_view s : {"ous", "ful", "ive", "able", "ible", "less", "ic", "al"}) {
    if (ends_with(w, s)) return PosBucket::kAdjective;
  }
  for (std::string_view s : {"ing", "ed", "ize", "ise", "ify"}) {
    if (ends_with(w, s)) return PosBucket::kVerb;
  }
  return PosBucket::kNoun;
}

std::array<double, kNumPosBuckets> pos_features(const std::vector<std::string>& tokens) {
  std::array<double, kNumPosBuckets> f{};
  for (const std::string& t : tokens) f[static_cast<size_t>(pos_bucket(t))] += 1.0;
  if (!tokens.empty()) {
    for (double& v : f) v /= static_cast<double>(tokens.size());
  }
  return f;
}

std::vector<std::string> char_ngrams(std::string_view word) {
  std::string w = "<" + std::string(word) + ">";
  std::vector<std::string> out;
  for (size_t n = 3; n <= 5; ++n) {
    for (size_t i = 0; i + n <= w.size(); ++i) out.push_back(w.substr(i, n));
  }
  if (out.empty()) out.push_back(w);
  return out;
}

namespace {

// Binary target: 1 for SUDP.
double target_of(const Post& p) { return *p.sud == SudLabel::kSUDP ? 1.0 : 0.0; }
int class_of(double p_sudp) { return p_sudp >= 0.5 ? 0 : 1; }

struct Prepared {
  std::vector<std::vector<std::string>> tokens;  // per post
  std::vector<std::vector<size_t>> seq;          // prior posts then the post itself
  std::vector<double> y;
  SplitIndices idx;
};

Prepared prepare(const Corpus& corpus, const Ontology* mask_with, const BaselineConfig& cfg) {
  if (corpus.empty()) throw InputError("baseline: empty corpus");
  for (const Post& p : corpus) {
    if (!p.sud) throw InputError("baseline: post '" + p.id + "' has no sud label");
  }
  Prepared d;
  d.idx = split_indices(corpus, cfg.split);
  if (d.idx.train.empty() || d.idx.dev.empty() || d.idx.test.empty()) {
    throw InputError("baseline: a split part is empty (corpus too small for the ratios)");
  }
  HistoryIndex hist(corpus, cfg.history_key);
  for (size_t i = 0; i < corpus.size(); ++i) {
    d.tokens.push_back(encoder_tokens(prepare_text(corpus[i].text, mask_with)));
    d.y.push_back(target_of(corpus[i]));
    std::vector<size_t> s;
    for (const PriorPost& p : hist.history(i, cfg.dims.window).prior) s.push_back(p.index);
    s.push_back(i);
    d.seq.push_back(std::move(s));
  }
  return d;
}

PRF score(const Prepared& d, const std::vector<size_t>& idx,
          const std::function<double(size_t)>& prob) {
  std::vector<int> gold, pred;
  for (size_t i : idx) {
    gold.push_back(d.y[i] > 0.5 ? 0 : 1);
    pred.push_back(class_of(prob(i)));
  }
  return prf(confusion(gold, pred, kNumSudLabels));
}

// Mini-batch Adam with best-dev selection. `step` accumulates the gradient of
// one example; parameters are snapshotted by value.
// With `sgd` the update is plain gradient descent instead of Adam.
BaselineResult fit(const Prepared& d, const TrainConfig& tc, std::string_view tag,
                   const std::vector<Tensor*>& params, const std::function<void(size_t)>& step,
                   const std::function<double(size_t)>& prob, bool sgd = false) {
  if (tc.batch == 0) throw InputError("baseline: batch size must be positive");
  auto snapshot = [&] {
    std::vector<Vec> s;
    for (Tensor* t : params) s.push_back(t->value);
    return s;
  };
  BaselineResult res;
  res.dev = score(d, d.idx.dev, prob);
  std::vector<Vec> best = snapshot();
  AdamState adam;
  AdamConfig acfg;
  acfg.lr = tc.lr;
  for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::vector<size_t> order = d.idx.train;
    Rng shuffle(tc.seed, std::string(tag) + ".shuffle", epoch);
    shuffle.shuffle(order);
    for (size_t start = 0; start < order.size(); start += tc.batch) {
      size_t end = std::min(order.size(), start + tc.batch);
      zero_grads(params);
      for (size_t k = start; k < end; ++k) step(order[k]);
      scale_grads(params, 1.0 / static_cast<double>(end - start));
      if (sgd) {
        for (Tensor* t : params) {
          for (size_t j = 0; j < t->size(); ++j) t->value[j] -= tc.lr * t->grad[j];
        }
      } else {
        adam_step(params, adam, acfg);
      }
    }
    PRF dev = score(d, d.idx.dev, prob);
    if (dev.macro_f1 > res.dev.macro_f1) {
      res.dev = dev;
      res.best_epoch = epoch;
      best = snapshot();
    }
  }
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  res.train = score(d, d.idx.train, prob);
  res.test = score(d, d.idx.test, prob);
  return res;
}

// ---------------------------------------------------------------------------

using SparseVec = std::vector<std::pair<size_t, double>>;

BaselineResult run_lr(const Prepared& d, const BaselineConfig& cfg) {
  std::vector<std::vector<std::string>> grams(d.tokens.size());
  for (size_t i = 0; i < d.tokens.size(); ++i) grams[i] = ngrams(d.tokens[i], nullptr);
  std::map<std::string, size_t> df;
  for (size_t i : d.idx.train) {
    std::set<std::string_view> seen(grams[i].begin(), grams[i].end());
    for (std::string_view g : seen) ++df[std::string(g)];
  }
  std::unordered_map<std::string, size_t> col;
  std::vector<double> idf;
  const double n = static_cast<double>(d.idx.train.size());
  for (const auto& [g, c] : df) {
    col.emplace(g, idf.size());
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(c))) + 1.0);
  }
  const size_t nf = idf.size();
  std::vector<SparseVec> x(d.tokens.size());
  for (size_t i = 0; i < d.tokens.size(); ++i) {
    std::map<size_t, double> tf;
    for (const std::string& g : grams[i]) {
      auto it = col.find(g);
      if (it != col.end()) tf[it->second] += 1.0;
    }
    double norm = 0.0;
    for (auto& [j, v] : tf) {
      v *= idf[j];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (const auto& [j, v] : tf) x[i].emplace_back(j, v / norm);
    auto pos = pos_features(d.tokens[i]);
    for (size_t b = 0; b < kNumPosBuckets; ++b) {
      if (pos[b] != 0.0) x[i].emplace_back(nf + b, pos[b]);
    }
  }
  Tensor w({nf + kNumPosBuckets}), b({1});
  auto prob = [&](size_t i) {
    double z = b[0];
    for (const auto& [j, v] : x[i]) z += w[j] * v;
    return sigmoid(z);
  };
  auto step = [&](size_t i) {
    double dz = prob(i) - d.y[i];
    for (const auto& [j, v] : x[i]) w.grad[j] += dz * v;
    b.grad[0] += dz;
  };
  TrainConfig tc = cfg.train;
  tc.lr = cfg.lr_sgd;
  return fit(d, tc, "lr", {&w, &b}, step, prob, true);
}

BaselineResult run_h_rnn(const Prepared& d, const BaselineConfig& cfg) {
  const size_t dim = cfg.dims.d, hid = cfg.dims.h;
  if (cfg.hash_buckets == 0) throw InputError("baseline: hash_buckets must be positive");
  Tensor table({cfg.hash_buckets, dim});
  Rng trng(cfg.train.seed, "h_rnn.subword");
  init_uniform(table, trng, 0.5);
  std::unordered_map<std::string, Vec> word_cache;
  auto word_vec = [&](const std::string& w) -> const Vec& {
    auto it = word_cache.find(w);
    if (it != word_cache.end()) return it->second;
    Vec v(dim, 0.0);
    std::vector<std::string> g = char_ngrams(w);
    for (const std::string& s : g) {
      const double* r = table.row(hash_string(s) % cfg.hash_buckets);
      for (size_t k = 0; k < dim; ++k) v[k] += r[k];
    }
    for (double& e : v) e /= static_cast<double>(g.size());
    return word_cache.emplace(w, std::move(v)).first->second;
  };
  std::vector<Vec> post_vec(d.tokens.size(), Vec(dim, 0.0));
  for (size_t i = 0; i < d.tokens.size(); ++i) {
    for (const std::string& t : d.tokens[i]) {
      const Vec& v = word_vec(t);
      for (size_t k = 0; k < dim; ++k) post_vec[i][k] += v[k];
    }
    if (!d.tokens[i].empty()) {
      for (double& e : post_vec[i]) e /= static_cast<double>(d.tokens[i].size());
    }
  }
  Rng init(cfg.train.seed, "h_rnn.init");
  RnnParams rnn(dim, hid);
  rnn.init(init);
  Dense out(hid, 1);
  out.init(init);
  auto sequence = [&](size_t i) {
    std::vector<Vec> s;
    for (size_t j : d.seq[i]) s.push_back(post_vec[j]);
    return s;
  };
  auto prob = [&](size_t i) {
    RnnTrace tr = rnn_forward(sequence(i), rnn);
    return sigmoid(out.forward(tr.h.back())[0]);
  };
  auto step = [&](size_t i) {
    RnnTrace tr = rnn_forward(sequence(i), rnn);
    double dz = sigmoid(out.forward(tr.h.back())[0]) - d.y[i];
    std::vector<Vec> dh(tr.h.size(), Vec(hid, 0.0));
    dh.back() = out.backward(tr.h.back(), std::vector<double>{dz});
    rnn_backward(tr, rnn, dh);
  };
  std::vector<Tensor*> params = rnn.params();
  params.push_back(&out.w);
  params.push_back(&out.b);
  return fit(d, cfg.train, "h_rnn", params, step, prob);
}

BaselineResult run_h_lstm(const Prepared& d, const BaselineConfig& cfg) {
  const size_t dim = cfg.dims.d, hid = cfg.dims.h;
  std::vector<std::string> texts;
  for (size_t i : d.idx.train) texts.push_back(join(d.tokens[i], " "));
  Rng init(cfg.train.seed, "h_lstm.init");
  EncoderModel enc = make_encoder(Vocabulary::build(texts), dim, init);
  std::vector<std::vector<int>> ids(d.tokens.size());
  for (size_t i = 0; i < d.tokens.size(); ++i) {
    for (const std::string& t : d.tokens[i]) ids[i].push_back(enc.vocab.id(t));
  }
  LstmParams lstm(dim, hid);
  lstm.init(init);
  AttentionParams attn(hid, cfg.dims.attn);
  attn.init(init);
  Dense out(hid, 1);
  out.init(init);
  struct Pass {
    LstmTrace lstm;
    AttentionTrace attn;
    double p;
  };
  auto run = [&](size_t i) {
    std::vector<Vec> xs;
    for (size_t j : d.seq[i]) xs.push_back(enc.encode(ids[j]));
    Pass ps;
    ps.lstm = lstm_forward(xs, lstm);
    ps.attn = attention_forward(ps.lstm.h, attn);
    ps.p = sigmoid(out.forward(ps.attn.context)[0]);
    return ps;
  };
  auto prob = [&](size_t i) { return run(i).p; };
  auto step = [&](size_t i) {
    Pass ps = run(i);
    Vec dctx = out.backward(ps.attn.context, std::vector<double>{ps.p - d.y[i]});
    std::vector<Vec> dh = attention_backward(ps.attn, attn, dctx);
    std::vector<Vec> dx = lstm_backward(ps.lstm, lstm, dh);
    for (size_t k = 0; k < dx.size(); ++k) embed_mean_backward(ids[d.seq[i][k]], dx[k], enc.table);
  };
  std::vector<Tensor*> params = {&enc.table};
  for (Tensor* t : lstm.params()) params.push_back(t);
  for (Tensor* t : attn.params()) params.push_back(t);
  params.push_back(&out.w);
  params.push_back(&out.b);
  return fit(d, cfg.train, "h_lstm", params, step, prob);
}

}  // namespace

BaselineResult run_baseline(const Corpus& corpus, const Ontology* mask_with, Baseline baseline,
                            const BaselineConfig& cfg) {
  Prepared d = prepare(corpus, mask_with, cfg);
  switch (baseline) {
    case Baseline::kLrPosTfidf: return run_lr(d, cfg);
    case Baseline::kHRnn: return run_h_rnn(d, cfg);
    case Baseline::kHLstm: return run_h_lstm(d, cfg);
  }
  throw InputError("unknown baseline");
}

}  // namespace d2s
