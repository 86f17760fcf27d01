#include <doctest.h>

#include <map>

#include "d2s/baselines.h"
#include "d2s/text.h"
#include "helpers.h"

using namespace d2s;
using d2s::test::dao;

namespace {

Corpus text_only(size_t authors, uint64_t seed) {
  SynthConfig cfg;
  cfg.signal = SynthSignal::kTextOnly;
  cfg.noise = 0.0;
  cfg.n_authors = authors;
  return synth_generate(cfg, seed).corpus;
}

bool perceptron_separates(const Corpus& c) {
  std::map<std::string, double> w;
  double b = 0;
  for (int epoch = 0; epoch < 200; ++epoch) {
    int mistakes = 0;
    for (const Post& p : c) {
      double y = p.sud == SudLabel::kSUDP ? 1 : -1;
      auto toks = encoder_tokens(p.text);
      double s = b;
      for (const auto& t : toks) s += w[t];
      if (y * s <= 0) {
        ++mistakes;
        for (const auto& t : toks) w[t] += y;
        b += y;
      }
    }
    if (mistakes == 0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("names") {
  for (Baseline b : kAllBaselines) CHECK(parse_baseline(baseline_name(b)) == b);
  CHECK(parse_baseline("h-lstm") == Baseline::kHLstm);
  CHECK(parse_baseline("lr") == Baseline::kLrPosTfidf);
  CHECK_FALSE(parse_baseline("svm").has_value());
}

TEST_CASE("pos buckets") {
  CHECK(pos_bucket("the") == PosBucket::kFunction);
  CHECK(pos_bucket("was") == PosBucket::kVerb);
  CHECK(pos_bucket("quickly") == PosBucket::kAdverb);
  CHECK(pos_bucket("hopeless") == PosBucket::kAdjective);
  CHECK(pos_bucket("relapsing") == PosBucket::kVerb);
  CHECK(pos_bucket("doctor") == PosBucket::kNoun);
  CHECK(pos_bucket("[DRUG_HEROIN]") == PosBucket::kNoun);
  CHECK(pos_bucket("42") == PosBucket::kOther);
  auto f = pos_features({"the", "doctor", "was", "42"});
  CHECK(f[static_cast<size_t>(PosBucket::kFunction)] == 0.25);
  CHECK(f[static_cast<size_t>(PosBucket::kOther)] == 0.25);
  double sum = 0;
  for (double v : f) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  for (double v : pos_features({})) CHECK(v == 0.0);
}

TEST_CASE("character n-grams") {
  auto g = char_ngrams("dope");
  // "<dope>" has 4 trigrams, 3 four-grams, 2 five-grams
  CHECK(g.size() == 9);
  CHECK(g.front() == "<do");
  CHECK(g.back() == "dope>");
  CHECK(char_ngrams("a") == std::vector<std::string>{"<a>"});
}

TEST_CASE("LR over TF-IDF and POS separates the text-only corpus") {
  Corpus c = text_only(100, 7);
  REQUIRE(perceptron_separates(c));
  BaselineConfig cfg;
  BaselineResult r = run_baseline(c, &dao(), Baseline::kLrPosTfidf, cfg);
  CHECK(r.train.accuracy == 1.0);
  CHECK(r.test.accuracy > 0.98);
  CHECK(r.test.macro_f1 > 0.98);
}

TEST_CASE("history baselines run with and without history") {
  Corpus c = text_only(20, 3);
  BaselineConfig cfg;
  cfg.train.epochs = 25;
  cfg.train.lr = 3e-2;
  cfg.dims.d = 16;
  cfg.dims.h = 8;
  cfg.dims.attn = 8;
  cfg.dims.window = 4;
  cfg.hash_buckets = 512;
  // frozen hashed subwords leave H_RNN much weaker than H_LSTM here
  const std::map<Baseline, double> floor = {{Baseline::kHRnn, 0.6}, {Baseline::kHLstm, 0.8}};
  for (Baseline b : {Baseline::kHRnn, Baseline::kHLstm}) {
    CAPTURE(baseline_name(b));
    BaselineResult r = run_baseline(c, &dao(), b, cfg);
    BaselineResult again = run_baseline(c, &dao(), b, cfg);
    CHECK(r.test.macro_f1 == again.test.macro_f1);
    CHECK(r.train.accuracy > floor.at(b));

    // one post per author: every history is empty
    Corpus lonely;
    for (Post p : c) {
      p.author = "solo_" + p.id;
      lonely.add(p);
    }
    BaselineResult solo = run_baseline(lonely, &dao(), b, cfg);
    CHECK(solo.test.per_class.size() == 2);
    CHECK(solo.train.accuracy > floor.at(b));
  }
}

TEST_CASE("baseline input errors") {
  Corpus c;
  c.add(test::make_post("x", "a", 0, "text"));
  CHECK_THROWS_AS(run_baseline(c, nullptr, Baseline::kLrPosTfidf, {}), InputError);
  Post p = test::make_post("y", "a", 1, "text");
  p.sud = SudLabel::kSUDP;
  Corpus one;
  one.add(p);
  CHECK_THROWS_AS(run_baseline(one, nullptr, Baseline::kHRnn, {}), InputError);
}
