#ifndef D2S_TESTS_TINY_H_
#define D2S_TESTS_TINY_H_

// Tiny temporal model instances shared by the model tests and the acceptance
// run (D=4, D_h=3, H=3, L=2).

#include <cmath>
#include <string>
#include <vector>

#include "d2s/models.h"
#include "d2s/text.h"
#include "helpers.h"
#include "oracle.h"

namespace d2s::test {

inline constexpr int64_t kDay = 86400;

inline ModelDims tiny_dims() {
  ModelDims d;
  d.d = 4;
  d.d_h = 3;
  d.h = 3;
  d.attn = 2;
  d.d_f = 5;
  d.window = 2;
  return d;
}

inline Corpus tiny_corpus() {
  Corpus c;
  c.add(make_post("a1", "alice", 10 * kDay, "so happy and grateful today"));
  c.add(make_post("a2", "alice", 12 * kDay, "feeling sad and lonely, used heroin"));
  c.add(make_post("a3", "alice", 15 * kDay + 3600, "cravings again, need smack"));
  c.add(make_post("b1", "bob", 11 * kDay, "kratom tea with friends"));
  c.add(make_post("b2", "bob", 20 * kDay, "kratom withdrawal is rough"));
  return c;
}

inline void randomize(const std::vector<Tensor*>& ps, Rng& rng, double scale = 0.5) {
  for (Tensor* t : ps) init_uniform(*t, rng, scale);
}

inline TemporalSUDModel tiny_model(AblationVariant v, bool finetune = false,
                            AttentionKind kind = AttentionKind::kAdditive, uint64_t seed = 1,
                            bool time_feature = true) {
  Corpus c = tiny_corpus();
  std::vector<std::string> texts;
  for (const Post& p : c) texts.push_back(prepare_text(p.text, &dao()));
  for (const Post& p : c) texts.push_back(p.text);
  Vocabulary vocab = Vocabulary::build(texts);
  TemporalOptions opt;
  opt.dims = tiny_dims();
  opt.finetune_extractors = finetune;
  opt.attention = kind;
  opt.time_feature = time_feature;
  Rng rng(seed, "tiny");
  HeadModel s = make_head(Task::kSentiment, vocab, opt.dims, 0.2, rng);
  HeadModel e = make_head(Task::kEmotion, vocab, opt.dims, 0.2, rng);
  randomize(s.params(), rng);
  randomize(e.params(), rng);
  TemporalSUDModel m = make_temporal(v, opt, s, e, vocab, 0.2, rng);
  randomize(m.params(), rng);
  randomize(m.lstm.params(), rng);
  randomize(m.attn.params(), rng);
  return m;
}

// Example built by hand from the posts, without the library's feature path.
inline TemporalExample oracle_example(const Corpus& c, size_t target,
                                      const std::vector<size_t>& prior,
                                      const TemporalSUDModel& m) {
  const Ontology* mask = m.masked() ? &dao() : nullptr;
  auto text = [&](size_t i) { return mask ? mask_entities(c[i].text, dao()) : c[i].text; };
  TemporalExample ex;
  ex.target_ids = m.target.vocab.encode(text(target));
  for (size_t i : prior) {
    double dt = static_cast<double>(c[target].timestamp - c[i].timestamp);
    ex.tau.push_back(m.opt.time_feature ? std::log(1.0 + dt / 86400.0) : 0.0);
    ex.s_ids.push_back(m.sentiment.encoder.vocab.encode(text(i)));
    ex.e_ids.push_back(m.emotion.encoder.vocab.encode(text(i)));
    ex.e_s.push_back(oracle::head_features(m.sentiment, ex.s_ids.back()));
    ex.e_e.push_back(oracle::head_features(m.emotion, ex.e_ids.back()));
  }
  return ex;
}

}  // namespace d2s::test

#endif  // D2S_TESTS_TINY_H_
