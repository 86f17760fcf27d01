#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <ostream>

#include "d2s/corpus.h"
#include "d2s/error.h"
#include "d2s/rng.h"
#include "d2s/text.h"

namespace d2s {

namespace synth_vocab {

const std::vector<std::string>& sud_keywords() {
  static const std::vector<std::string> v = {"cravings", "withdrawal", "relapse",  "dopesick",
                                             "detox",    "tolerance",  "relapsed", "hooked",
                                             "sick",     "using"};
  return v;
}

const std::vector<std::string>& emotion_cues(Emotion e) {
  static const std::array<std::vector<std::string>, kNumEmotions> cues = {{
      {"happy", "glad", "great", "awesome", "cheerful", "excited"},             // Joy
      {"sad", "depressed", "lonely", "hopeless", "miserable", "crying"},        // Sadness
      {"angry", "furious", "hate", "pissed", "annoyed", "rage"},                // Anger
      {"love", "adore", "caring", "sweetheart", "beloved", "cherish"},          // Love
      {"afraid", "scared", "terrified", "anxious", "panic", "worried"},         // Fear
      {"thankful", "grateful", "thanks", "blessed", "appreciate", "gratitude"}, // Thankfulness
      {"surprised", "amazed", "wow", "astonished", "stunned", "incredible"},    // Surprise
  }};
  return cues[static_cast<size_t>(e)];
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> v = {
      "today",  "went",   "store",   "with",    "friend",  "talked",   "about", "work",
      "weekend", "morning", "night",  "house",   "car",     "music",    "thinking", "little",
      "bit",    "later",  "again",   "people",  "called",  "family",   "doctor", "forum",
      "post",   "question", "anyone", "know",   "week",    "month",    "just",  "still",
      "some",   "time",   "back",    "home",    "around",  "maybe",    "city",  "phone"};
  return v;
}

const std::vector<std::string>& drug_mentions(DrugCategory c) {
  static const std::array<std::vector<std::string>, 8> v = {{
      {"heroin", "dope", "smack", "black tar", "skag"},
      {"synthetic heroin", "fake dope", "synth heroin"},
      {"duragesic", "fentanyl patch", "actiq", "sublimaze"},
      {"pressed pills", "blues", "m30s", "carfentanil", "acetylfentanyl"},
      {"fentanyl", "fent", "fetty", "china girl"},
      {"oxycodone", "oxy", "percocet", "roxy"},
      {"kratom", "ketum", "mitragynine"},
      {"opium", "poppy tea", "poppy pods"},
  }};
  return v[static_cast<size_t>(c)];
}

bool is_negative(Emotion e) {
  return e == Emotion::kSadness || e == Emotion::kAnger || e == Emotion::kFear;
}

}  // namespace synth_vocab

namespace {

constexpr std::array<std::string_view, 6> kSources = {
    "opiates", "OpiatesRecovery", "fentanyl", "heroin", "kratom", "Oxycodone"};
constexpr std::array<Emotion, 3> kNegative = {Emotion::kSadness, Emotion::kAnger, Emotion::kFear};
constexpr std::array<Emotion, 4> kPositive = {Emotion::kJoy, Emotion::kLove,
                                              Emotion::kThankfulness, Emotion::kSurprise};

constexpr int64_t kDay = 86400;
constexpr int64_t kStart2015 = 1420070400;  // 2015-01-01T00:00:00Z

struct Draft {
  std::string author;
  std::string source;
  int64_t timestamp;
  Emotion emotion;
  bool keyword;  // latent x
  bool history;  // latent h
  bool visible_keyword;
  int visible_valence;  // -1 negative cue seen, +1 positive, 0 none
  DrugCategory category;
  std::string text;
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

}  // namespace

void SynthManifest::write(std::ostream& out) const {
  out << "generator\td2s-synth v1\n";
  out << "seed\t" << seed << '\n';
  out << "n_authors\t" << config.n_authors << '\n';
  out << "posts_per_author\t" << config.posts_per_author << '\n';
  out << "signal\t"
      << (config.signal == SynthSignal::kHistoryDependent ? "history_dependent" : "text_only")
      << '\n';
  out << "noise\t" << format_double(config.noise) << '\n';
  out << "keyword_rate\t" << format_double(config.keyword_rate) << '\n';
  out << "window\t" << config.window << '\n';
  out << "posts\t" << posts << '\n';
  out << "sudp\t" << positives << '\n';
  out << "single_post_ceiling\t" << format_fixed(single_post_ceiling, 6) << '\n';
  out << "rule\t" << rule << '\n';
}

SynthCorpus synth_generate(const SynthConfig& config, uint64_t seed) {
  if (config.n_authors == 0 || config.posts_per_author == 0) {
    throw InputError("synth: n_authors and posts_per_author must be at least 1");
  }
  if (!(config.noise >= 0.0 && config.noise <= 1.0)) throw InputError("synth: noise must be in [0,1]");
  if (!(config.keyword_rate >= 0.0 && config.keyword_rate <= 1.0)) {
    throw InputError("synth: keyword_rate must be in [0,1]");
  }
  using namespace synth_vocab;
  const bool hist = config.signal == SynthSignal::kHistoryDependent;

  std::vector<Draft> drafts;
  drafts.reserve(config.n_authors * config.posts_per_author);
  for (size_t a = 0; a < config.n_authors; ++a) {
    Rng rng(seed, "synth.author", a);
    char name[32];
    std::snprintf(name, sizeof name, "author%04zu", a + 1);
    double negativity = rng.uniform(0.2, 0.8);
    auto home = kAllCategories[rng.below(kAllCategories.size())];
    std::string source(kSources[rng.below(kSources.size())]);
    int64_t t = kStart2015 + static_cast<int64_t>(rng.below(4 * 365)) * kDay +
                static_cast<int64_t>(rng.below(kDay));
    std::vector<bool> negative_past;
    for (size_t j = 0; j < config.posts_per_author; ++j) {
      Draft d;
      d.author = name;
      d.source = source;
      d.timestamp = t;
      t += kDay + static_cast<int64_t>(rng.below(29 * kDay));
      bool neg = rng.bernoulli(negativity);
      d.emotion = neg ? kNegative[rng.below(kNegative.size())] : kPositive[rng.below(kPositive.size())];
      d.keyword = rng.bernoulli(config.keyword_rate);
      size_t lo = negative_past.size() > config.window ? negative_past.size() - config.window : 0;
      size_t negs = 0;
      for (size_t k = lo; k < negative_past.size(); ++k) negs += negative_past[k] ? 1 : 0;
      d.history = 2 * negs > negative_past.size() - lo;
      negative_past.push_back(neg);
      d.category = rng.bernoulli(0.8) ? home : kAllCategories[rng.below(kAllCategories.size())];

      // Token units; a multi-word drug mention stays one unit.
      std::vector<std::string> units;
      const std::vector<std::string>& fill = filler_words();
      size_t n_fill = 6 + rng.below(5);
      for (size_t k = 0; k < n_fill; ++k) units.push_back(pick(rng, fill));
      d.visible_valence = 0;
      for (int k = 0; k < 2; ++k) {
        if (rng.bernoulli(config.noise)) {
          units.push_back(pick(rng, fill));
        } else {
          units.push_back(pick(rng, emotion_cues(d.emotion)));
          d.visible_valence = neg ? -1 : 1;
        }
      }
      d.visible_keyword = false;
      if (d.keyword) {
        for (int k = 0; k < 2; ++k) {
          if (rng.bernoulli(config.noise)) {
            units.push_back(pick(rng, fill));
          } else {
            units.push_back(pick(rng, sud_keywords()));
            d.visible_keyword = true;
          }
        }
      }
      units.push_back(pick(rng, drug_mentions(d.category)));
      rng.shuffle(units);
      d.text = join(units, " ");
      drafts.push_back(std::move(d));
    }
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.author < b.author;
  });

  SynthCorpus out;
  SynthManifest& m = out.manifest;
  m.config = config;
  m.seed = seed;
  // Single-post Bayes ceiling: group by what one post can reveal about the
  // latent variables and take the majority label of each group.
  std::map<std::pair<bool, int>, std::array<size_t, 2>> groups;
  std::vector<Post> posts;
  posts.reserve(drafts.size());
  for (size_t i = 0; i < drafts.size(); ++i) {
    Draft& d = drafts[i];
    bool sudp = hist ? (d.keyword && d.history) : d.keyword;
    Post p;
    char id[32];
    std::snprintf(id, sizeof id, "syn%06zu", i + 1);
    p.id = id;
    p.author = d.author;
    p.source = d.source;
    p.timestamp = d.timestamp;
    p.text = std::move(d.text);
    p.emotion = d.emotion;
    p.sentiment = is_negative(d.emotion) ? Sentiment::kNegative : Sentiment::kPositive;
    p.sud = sudp ? SudLabel::kSUDP : SudLabel::kSUDA;
    p.drug_tags = {d.category};
    m.positives += sudp ? 1 : 0;
    ++groups[{d.visible_keyword, d.visible_valence}][sudp ? 0 : 1];
    posts.push_back(std::move(p));
  }
  size_t best = 0;
  for (const auto& [key, c] : groups) best += std::max(c[0], c[1]);
  m.posts = posts.size();
  m.single_post_ceiling = posts.empty() ? 1.0 : static_cast<double>(best) / posts.size();
  m.rule = hist ? "SUDP iff the post was written with SUD keywords and a strict majority of the "
                  "author's previous " +
                      std::to_string(config.window) +
                      " posts carry negative emotion (Sadness, Anger, Fear); noise replaces "
                      "each planted cue word with filler"
                : "SUDP iff the post was written with SUD keywords; noise replaces each planted "
                  "cue word with filler";
  out.corpus = Corpus(std::move(posts));
  return out;
}

}  // namespace d2s
