#include "d2s/corpus.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "d2s/error.h"
#include "d2s/rng.h"
#include "d2s/text.h"

namespace d2s {
namespace {

constexpr std::array<std::string_view, kNumSentiments> kSentimentNames = {"Positive", "Negative",
                                                                          "Neutral"};
constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "Joy", "Sadness", "Anger", "Love", "Fear", "Thankfulness", "Surprise"};
constexpr std::array<std::string_view, kNumSudLabels> kSudNames = {"SUDP", "SUDA"};

template <typename E, size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<std::string_view, N>& names) {
  std::string low = to_lower(trim(s));
  for (size_t i = 0; i < N; ++i) {
    if (to_lower(names[i]) == low) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <typename E, size_t N>
std::string_view opt_name(const std::optional<E>& v, const std::array<std::string_view, N>& names) {
  return v ? names[static_cast<size_t>(*v)] : std::string_view("-");
}

}  // namespace

std::string_view sentiment_name(Sentiment s) { return kSentimentNames[static_cast<size_t>(s)]; }
std::string_view emotion_name(Emotion e) { return kEmotionNames[static_cast<size_t>(e)]; }
std::string_view sud_name(SudLabel s) { return kSudNames[static_cast<size_t>(s)]; }
std::optional<Sentiment> parse_sentiment(std::string_view s) {
  return parse_enum<Sentiment>(s, kSentimentNames);
}
std::optional<Emotion> parse_emotion(std::string_view s) {
  return parse_enum<Emotion>(s, kEmotionNames);
}
std::optional<SudLabel> parse_sud(std::string_view s) { return parse_enum<SudLabel>(s, kSudNames); }

Corpus::Corpus(std::vector<Post> posts) {
  posts_.reserve(posts.size());
  for (Post& p : posts) add(std::move(p));
}

void Corpus::add(Post p) {
  if (p.timestamp < 0) throw InputError("post '" + p.id + "' has a negative timestamp");
  auto [it, inserted] = index_.emplace(p.id, posts_.size());
  if (!inserted) throw InputError("duplicate post id '" + p.id + "'");
  posts_.push_back(std::move(p));
}

std::optional<size_t> Corpus::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// I/O

Corpus read_corpus(std::istream& in, std::string_view source) {
  Corpus corpus;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto where = [&] { return std::string(source) + ":" + std::to_string(lineno) + ": "; };
    std::vector<std::string_view> f = split(line, '\t');
    // A ninth column carries drug tags written by `prep tag`.
    if (f.size() != 8 && f.size() != 9) {
      throw InputError(where() + "expected 8 tab-separated fields, got " +
                       std::to_string(f.size()));
    }
    Post p;
    p.id = std::string(trim(f[0]));
    if (p.id.empty()) throw InputError(where() + "empty post id");
    p.author = unescape_field(f[1]);
    p.source = unescape_field(f[2]);
    auto ts = parse_timestamp(f[3]);
    if (!ts || *ts < 0) throw InputError(where() + "bad timestamp '" + std::string(f[3]) + "'");
    p.timestamp = *ts;
    auto label = [&](std::string_view v, auto parse, const char* what) {
      v = trim(v);
      if (v == "-" || v.empty()) return decltype(parse(v)){};
      auto r = parse(v);
      if (!r) throw InputError(where() + "bad " + what + " label '" + std::string(v) + "'");
      return r;
    };
    p.sentiment = label(f[4], parse_sentiment, "sentiment");
    p.emotion = label(f[5], parse_emotion, "emotion");
    p.sud = label(f[6], parse_sud, "sud");
    p.text = unescape_field(f[7]);
    if (f.size() == 9) {
      for (std::string_view t : split(f[8], ',')) {
        t = trim(t);
        if (t.empty()) continue;
        auto c = parse_category(t);
        if (!c) throw InputError(where() + "unknown drug category '" + std::string(t) + "'");
        p.drug_tags.insert(*c);
      }
    }
    try {
      corpus.add(std::move(p));
    } catch (const InputError& e) {
      throw InputError(where() + e.what());
    }
  }
  return corpus;
}

Corpus ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  return read_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Post& p : corpus) {
    out << p.id << '\t' << escape_field(p.author) << '\t' << escape_field(p.source) << '\t'
        << format_timestamp(p.timestamp) << '\t' << opt_name(p.sentiment, kSentimentNames) << '\t'
        << opt_name(p.emotion, kEmotionNames) << '\t' << opt_name(p.sud, kSudNames) << '\t'
        << escape_field(p.text);
    if (!p.drug_tags.empty()) {
      std::vector<std::string> tags;
      for (DrugCategory c : p.drug_tags) tags.emplace_back(category_name(c));
      out << '\t' << join(tags, ",");
    }
    out << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_corpus(out, corpus);
}

// ---------------------------------------------------------------------------
// Entities

Corpus tag_drugs(const Corpus& corpus, const Ontology& ontology) {
  std::vector<Post> posts = corpus.posts();
  for (Post& p : posts) {
    p.drug_tags.clear();
    for (const GazetteerMatch& m : ontology.scan(p.text)) {
      if (auto c = ontology.super_category(*m.concept_ptr)) p.drug_tags.insert(*c);
    }
  }
  return Corpus(std::move(posts));
}

std::string mask_entities(std::string_view text, const Ontology& ontology) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  for (const GazetteerMatch& m : ontology.scan(text)) {
    out.append(text.substr(pos, m.begin - pos));
    out += mask_token(ontology.super_category(*m.concept_ptr));
    pos = m.end;
  }
  out.append(text.substr(pos));
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and splits

Corpus stratified_sample(const Corpus& corpus, size_t per_stratum, StratifyBy by, uint64_t seed) {
  if (per_stratum == 0) throw InputError("per_stratum must be at least 1");
  std::map<std::pair<int, int>, std::vector<size_t>> strata;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Post& p = corpus[i];
    int cat = p.drug_tags.empty() ? -1 : static_cast<int>(*p.drug_tags.begin());
    int lab = p.sud ? static_cast<int>(*p.sud) : -1;
    bool need_cat = by != StratifyBy::kSudLabel;
    bool need_lab = by != StratifyBy::kDrugCategory;
    if ((need_cat && cat < 0) || (need_lab && lab < 0)) continue;
    strata[{need_cat ? cat : 0, need_lab ? lab : 0}].push_back(i);
  }
  std::vector<size_t> chosen;
  for (auto& [key, members] : strata) {
    Rng rng(seed, "stratified_sample",
            static_cast<uint64_t>(key.first + 1) * 16 + static_cast<uint64_t>(key.second + 1));
    size_t take = std::min(per_stratum, members.size());
    // Partial Fisher-Yates: the first `take` slots are a uniform draw.
    for (size_t k = 0; k < take; ++k) {
      size_t j = k + rng.below(members.size() - k);
      std::swap(members[k], members[j]);
    }
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<long>(take));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Post> out;
  out.reserve(chosen.size());
  for (size_t i : chosen) out.push_back(corpus[i]);
  return Corpus(std::move(out));
}

std::array<size_t, 3> split_counts(size_t n, const SplitSpec& spec) {
  std::array<int, 3> share = {spec.train, spec.dev, spec.test};
  if (spec.train < 0 || spec.dev < 0 || spec.test < 0 || spec.train + spec.dev + spec.test != 100) {
    throw InputError("split ratios must be non-negative and sum to 100");
  }
  std::array<size_t, 3> counts{};
  std::array<size_t, 3> rem{};
  size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = n * static_cast<size_t>(share[k]) / 100;
    rem[k] = n * static_cast<size_t>(share[k]) % 100;
    used += counts[k];
  }
  // Leftover posts go to the largest remainders; ties prefer train, test, dev.
  std::array<int, 3> order = {0, 2, 1};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (size_t k = 0; used < n; ++k, ++used) ++counts[order[k % 3]];
  return counts;
}

SplitIndices split_indices(const Corpus& corpus, const SplitSpec& spec) {
  std::array<std::vector<size_t>, 3> strata;  // SUDP, SUDA, unlabeled
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Post& p = corpus[i];
    strata[p.sud ? static_cast<size_t>(*p.sud) : 2].push_back(i);
  }
  const std::array<size_t, 3> share = {static_cast<size_t>(spec.train),
                                       static_cast<size_t>(spec.dev),
                                       static_cast<size_t>(spec.test)};
  // Controlled rounding: each stratum gets floor or floor+1 of its exact share
  // per part, and the part totals equal split_counts() of the whole corpus.
  std::array<size_t, 3> demand = split_counts(corpus.size(), spec);
  std::array<std::array<size_t, 3>, 3> counts{};
  std::array<std::array<size_t, 3>, 3> rem{};
  std::array<size_t, 3> leftover{};
  for (size_t s = 0; s < 3; ++s) {
    size_t n = strata[s].size();
    size_t used = 0;
    for (size_t k = 0; k < 3; ++k) {
      counts[s][k] = n * share[k] / 100;
      rem[s][k] = n * share[k] % 100;
      used += counts[s][k];
      demand[k] -= counts[s][k];
    }
    leftover[s] = n - used;
  }
  std::array<size_t, 3> row_order = {0, 1, 2};
  std::stable_sort(row_order.begin(), row_order.end(),
                   [&](size_t a, size_t b) { return leftover[a] > leftover[b]; });
  for (size_t s : row_order) {
    std::array<size_t, 3> cols = {0, 2, 1};  // ties prefer train, test, dev
    std::stable_sort(cols.begin(), cols.end(), [&](size_t a, size_t b) {
      if (demand[a] != demand[b]) return demand[a] > demand[b];
      return rem[s][a] > rem[s][b];
    });
    for (size_t j = 0; j < leftover[s]; ++j) {
      ++counts[s][cols[j]];
      --demand[cols[j]];
    }
  }

  SplitIndices out;
  for (size_t s = 0; s < strata.size(); ++s) {
    std::vector<size_t>& members = strata[s];
    if (members.empty()) continue;
    Rng rng(spec.seed, "split", s);
    rng.shuffle(members);
    const std::array<size_t, 3>& c = counts[s];
    auto first = members.begin();
    out.train.insert(out.train.end(), first, first + static_cast<long>(c[0]));
    first += static_cast<long>(c[0]);
    out.dev.insert(out.dev.end(), first, first + static_cast<long>(c[1]));
    first += static_cast<long>(c[1]);
    out.test.insert(out.test.end(), first, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.dev.begin(), out.dev.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Splits split(const Corpus& corpus, const SplitSpec& spec) {
  SplitIndices idx = split_indices(corpus, spec);
  auto pick = [&](const std::vector<size_t>& ids) {
    std::vector<Post> v;
    v.reserve(ids.size());
    for (size_t i : ids) v.push_back(corpus[i]);
    return Corpus(std::move(v));
  };
  return {pick(idx.train), pick(idx.dev), pick(idx.test)};
}

// ---------------------------------------------------------------------------
// History

HistoryIndex::HistoryIndex(const Corpus& corpus, HistoryKey key) : corpus_(&corpus), key_(key) {
  for (size_t i = 0; i < corpus.size(); ++i) {
    const Post& p = corpus[i];
    if (key == HistoryKey::kAuthor) {
      by_author_[p.author].push_back(i);
    } else {
      for (DrugCategory c : p.drug_tags) by_category_[static_cast<size_t>(c)].push_back(i);
    }
  }
  auto by_time = [&](size_t a, size_t b) {
    const Post& pa = corpus[a];
    const Post& pb = corpus[b];
    return pa.timestamp != pb.timestamp ? pa.timestamp < pb.timestamp : a < b;
  };
  for (auto& [author, v] : by_author_) std::sort(v.begin(), v.end(), by_time);
  for (auto& v : by_category_) std::sort(v.begin(), v.end(), by_time);
}

PostHistory HistoryIndex::history(size_t target, size_t window) const {
  const Corpus& corpus = *corpus_;
  const Post& t = corpus[target];
  PostHistory h{target, {}, window};
  if (window == 0) return h;
  // Candidates strictly earlier than the target, each timeline contributing its
  // last `window`; we then keep the overall latest `window`.
  std::vector<size_t> cand;
  auto collect = [&](const std::vector<size_t>& tl) {
    auto end = std::lower_bound(tl.begin(), tl.end(), t.timestamp,
                                [&](size_t i, int64_t ts) { return corpus[i].timestamp < ts; });
    auto begin = end - std::min<long>(static_cast<long>(window), end - tl.begin());
    cand.insert(cand.end(), begin, end);
  };
  if (key_ == HistoryKey::kAuthor) {
    auto it = by_author_.find(t.author);
    if (it != by_author_.end()) collect(it->second);
  } else {
    for (DrugCategory c : t.drug_tags) collect(by_category_[static_cast<size_t>(c)]);
  }
  std::sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
    const Post& pa = corpus[a];
    const Post& pb = corpus[b];
    return pa.timestamp != pb.timestamp ? pa.timestamp < pb.timestamp : a < b;
  });
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (cand.size() > window) cand.erase(cand.begin(), cand.end() - static_cast<long>(window));
  for (size_t i : cand) h.prior.push_back({i, t.timestamp - corpus[i].timestamp});
  return h;
}

PostHistory history(const Corpus& corpus, size_t target, size_t window, HistoryKey key) {
  return HistoryIndex(corpus, key).history(target, window);
}

}  // namespace d2s
