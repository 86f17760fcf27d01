// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "d2s/corpus.h"
#include "d2s/eval_stats.h"
#include "d2s/listing.h"
#include "d2s/models.h"
#include "d2s/sentiment.h"
#include "d2s/text.h"
#include "helpers.h"
#include "oracle.h"
#include "tiny.h"

namespace fs = std::filesystem;
using namespace d2s;
using namespace d2s::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<Vec> random_seq(Rng& rng, size_t n, size_t d) {
  std::vector<Vec> s(n, Vec(d));
  for (auto& x : s) {
    for (double& v : x) v = rng.uniform(-1, 1);
  }
  return s;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string("\"") + D2S_CLI + "\" " + args + " >>\"" + log.string() +
                    "\" 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  auto t0 = Clock::now();
  double worst = 0;
  std::string where;
  size_t checked = 0;
  auto record = [&](const std::string& name, const GradCheckResult& r) {
    checked += r.checked;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      where = name + ":" + r.worst;
    }
  };
  Rng rng(101, "accept.grad");

  {  // embed_mean
    Tensor table({6, 4});
    init_uniform(table, rng, 0.5);
    std::vector<int> ids = {0, 2, 2, 5};
    Vec w = random_seq(rng, 1, 4)[0];
    table.zero_grad();
    embed_mean_backward(ids, w, table);
    record("embed_mean",
           grad_check([&] { return dot(embed_mean(ids, table), w); }, {{"table", &table}}));
  }
  {  // Bi-LSTM
    BiLstmParams p(4, 3);
    p.init(rng);
    init_uniform(p.fwd.b, rng, 0.3);
    init_uniform(p.bwd.b, rng, 0.3);
    std::vector<Vec> seq = random_seq(rng, 3, 4);
    std::vector<Vec> w = random_seq(rng, 3, 6);
    auto loss = [&] {
      BiLstmTrace tr = bilstm_forward(seq, p);
      double s = 0;
      for (size_t t = 0; t < seq.size(); ++t) s += dot(tr.out[t], w[t]);
      return s;
    };
    for (Tensor* t : p.params()) t->zero_grad();
    bilstm_backward(bilstm_forward(seq, p), p, w);
    record("bilstm", grad_check(loss, {{"fwd.wx", &p.fwd.wx}, {"fwd.wh", &p.fwd.wh},
                                       {"fwd.b", &p.fwd.b},   {"bwd.wx", &p.bwd.wx},
                                       {"bwd.wh", &p.bwd.wh}, {"bwd.b", &p.bwd.b}}));
  }
  for (AttentionKind kind : {AttentionKind::kAdditive, AttentionKind::kDot}) {
    AttentionParams p(6, 2, kind);
    p.init(rng);
    init_uniform(p.v, rng, 1.0);
    std::vector<Vec> states = random_seq(rng, 4, 6);
    Vec w = random_seq(rng, 1, 6)[0];
    for (Tensor* t : p.params()) t->zero_grad();
    attention_backward(attention_forward(states, p), p, w);
    std::vector<std::pair<std::string, Tensor*>> named = {{"v", &p.v}};
    if (kind == AttentionKind::kAdditive) named.emplace_back("w", &p.w);
    record("attention",
           grad_check([&] { return dot(attention_forward(states, p).context, w); }, named));
  }
  {  // dense + ReLU away from the kink
    Dense layer(5, 4);
    layer.init(rng);
    init_uniform(layer.b, rng, 0.5);
    Vec x = random_seq(rng, 1, 5)[0];
    Vec w = random_seq(rng, 1, 4)[0];
    Vec pre = layer.forward(x);
    bool clear = true;
    for (double v : pre) clear = clear && std::abs(v) > 1e-3;
    layer.w.zero_grad();
    layer.b.zero_grad();
    layer.backward(x, relu_backward(pre, w));
    GradCheckResult r =
        grad_check([&] { return dot(dense_relu(x, layer), w); }, {{"w", &layer.w}, {"b", &layer.b}});
    if (!clear) r.max_rel_error = 1.0;
    record("dense_relu", r);
  }
  {  // softmax + cross-entropy w.r.t. logits
    Vec logits = {0.3, -1.2, 2.0, 0.1};
    Vec g = softmax_xent_grad(softmax(logits), 2);
    double e = grad_check([](const Vec& z) { return cross_entropy(softmax(z), 2); }, g, logits);
    record("softmax_xent", {e, logits.size(), "logits"});
  }
  {  // full temporal model, D=4, D_h=3, H=3, L=2
    Corpus c = tiny_corpus();
    TemporalSUDModel m = tiny_model(AblationVariant::kFull, false, AttentionKind::kAdditive, 17);
    m.dropout = 0.0;
    TemporalExample ex = oracle_example(c, 2, {0, 1}, m);
    std::vector<Tensor*> ps = m.params();
    zero_grads(ps);
    TemporalOutput o = temporal_forward(ex, m);
    bool clear = true;
    for (double v : o.trace.fuse_pre) clear = clear && std::abs(v) > 1e-4;
    temporal_backward(ex, m, o, 0);
    std::vector<std::pair<std::string, Tensor*>> named;
    for (size_t k = 0; k < ps.size(); ++k) named.emplace_back("p" + std::to_string(k), ps[k]);
    GradCheckResult r = grad_check([&] { return cross_entropy(temporal_forward(ex, m).probs, 0); },
                                   named);
    if (!clear) r.max_rel_error = 1.0;
    record("temporal", r);
  }
  double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          "max rel err " + num(worst) + " at " + where + " over " + std::to_string(checked) +
              " coordinates, " + num(secs) + " s"};
}

Outcome oracle_equivalence() {
  double worst = 0;
  size_t cases = 0;
  auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed, "accept.oracle");
    size_t in = 1 + rng.below(5), hid = 1 + rng.below(4), n = 1 + rng.below(5);
    BiLstmParams p(in, hid);
    p.init(rng);
    init_uniform(p.fwd.b, rng, 0.5);
    init_uniform(p.bwd.b, rng, 0.5);
    std::vector<Vec> seq = random_seq(rng, n, in);
    BiLstmTrace tr = bilstm_forward(seq, p);
    std::vector<Vec> want = oracle::bilstm(seq, p);
    for (size_t t = 0; t < n; ++t) {
      for (size_t k = 0; k < 2 * hid; ++k) diff(tr.out[t][k], want[t][k]);
    }

    AttentionKind kind = seed % 2 ? AttentionKind::kDot : AttentionKind::kAdditive;
    AttentionParams a(2 * hid, 1 + rng.below(4), kind);
    a.init(rng);
    init_uniform(a.v, rng, 1.5);
    AttentionTrace at = attention_forward(tr.out, a);
    oracle::Attn aw = oracle::attention(tr.out, a);
    for (size_t t = 0; t < n; ++t) diff(at.alpha[t], aw.alpha[t]);
    for (size_t k = 0; k < 2 * hid; ++k) diff(at.context[k], aw.context[k]);

    Corpus c = tiny_corpus();
    TemporalSUDModel m =
        tiny_model(kAllVariants[seed % 4], seed % 3 == 0, kind, 1000 + seed, seed % 5 != 0);
    size_t target = 2 + rng.below(3);
    std::vector<size_t> prior;
    for (size_t i = 0; i < target; ++i) {
      if (rng.bernoulli(0.6)) prior.push_back(i);
    }
    TemporalExample ex = oracle_example(c, target, prior, m);
    Vec got = temporal_forward(ex, m).probs;
    oracle::V tw = oracle::temporal_probs(ex, m);
    diff(got[0], tw[0]);
    diff(got[1], tw[1]);
    ++cases;
  }
  return {worst <= 1e-10, std::to_string(cases) + " instances each, max abs diff " + num(worst)};
}

Outcome sentiment_rules() {
  const SentimentLexicon lex = SentimentLexicon::load(data_file("sentiment/lexicon.tsv"));
  double e0 = std::abs(score_post("", lex).compound - 0.0);
  double e1 = std::abs(score_post("good", lex).compound - 0.4404);
  double e2 = std::abs(score_post("not good", lex).compound - (-0.3413));
  bool examples = e0 < 1e-4 && e1 < 1e-4 && e2 < 1e-4;

  size_t sym_fail = 0, mono_fail = 0, draws = 0;
  const std::vector<std::string> fillers = {"the", "day", "was", "!", "and"};
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    Rng r(seed, "accept.sentiment");
    std::vector<std::string> words;
    std::string text = "[boosters]\nvery\t0.293\nslightly\t-0.293\n[negations]\nnot\nnever\n";
    std::string valences;
    std::string positive;
    for (int k = 0; k < 6; ++k) {
      std::string w = "w" + std::to_string(k);
      double v = std::round(r.uniform(0.2, 4.0) * 10) / 10 * (r.bernoulli(0.5) ? 1 : -1);
      if (k == 0) v = std::abs(v);
      if (k == 0) positive = w;
      valences += w + "\t" + format_double(v) + "\n";
      words.push_back(w);
    }
    std::istringstream in(valences + text);
    SentimentLexicon l = SentimentLexicon::parse(in, "draw");
    SentimentLexicon flipped = l;
    for (auto& [t, v] : flipped.valence) v = -v;

    std::vector<std::string> pool = words;
    pool.insert(pool.end(), fillers.begin(), fillers.end());
    pool.insert(pool.end(), {"very", "slightly", "not", "W1", "W2"});
    std::string s;
    for (size_t k = 0, n = r.below(12); k < n; ++k) s += pool[r.below(pool.size())] + " ";
    double a = score_post(s, l).compound, b = score_post(s, flipped).compound;
    if (std::abs(a + b) > 1e-12 || std::abs(a) >= 1.0) ++sym_fail;

    // context without negations so "very" only amplifies the final word
    std::string ctx;
    for (size_t k = 0, n = r.below(8); k < n; ++k) {
      std::string w = pool[r.below(pool.size())];
      if (w != "not") ctx += w + " ";
    }
    if (score_post(ctx + "very " + positive, l).compound < score_post(ctx + positive, l).compound) {
      ++mono_fail;
    }
    ++draws;
  }
  return {examples && sym_fail == 0 && mono_fail == 0,
          "example errors " + num(e0) + "/" + num(e1) + "/" + num(e2) + "; " +
              std::to_string(draws) + " draws, symmetry failures " + std::to_string(sym_fail) +
              ", monotonicity failures " + std::to_string(mono_fail)};
}

Outcome statistics() {
  size_t bad = 0, cases = 0;
  for (uint64_t seed = 0; seed < 600; ++seed) {
    Rng r(seed, "accept.wilcoxon");
    size_t n = 1 + r.below(12);
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(r.below(7)) + (r.bernoulli(0.3) ? 0.5 : 0.0);
      y[i] = static_cast<double>(r.below(7));
    }
    // brute force over sign assignments with counted average ranks
    std::vector<double> d, rank;
    for (size_t i = 0; i < n; ++i) {
      if (x[i] != y[i]) d.push_back(x[i] - y[i]);
    }
    double p = 1.0;
    if (!d.empty()) {
      double wp = 0, wm = 0;
      for (double di : d) {
        double less = 0, eq = 0;
        for (double dj : d) {
          less += std::abs(dj) < std::abs(di);
          eq += std::abs(dj) == std::abs(di);
        }
        rank.push_back(less + (eq + 1) / 2);
        (di > 0 ? wp : wm) += rank.back();
      }
      double w = std::min(wp, wm), total = wp + wm;
      size_t hits = 0, all = size_t{1} << d.size();
      for (size_t mask = 0; mask < all; ++mask) {
        double plus = 0;
        for (size_t i = 0; i < d.size(); ++i) plus += (mask >> i & 1) ? rank[i] : 0;
        hits += std::min(plus, total - plus) <= w + 1e-9;
      }
      p = static_cast<double>(hits) / static_cast<double>(all);
    }
    if (std::abs(wilcoxon_signed_rank(x, y).p_value - p) > 1e-9) ++bad;
    ++cases;
  }
  double p5 = wilcoxon_signed_rank({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}).p_value;
  std::vector<int> a, b;
  for (auto [u, v, k] : std::vector<std::array<int, 3>>{{0, 0, 40}, {0, 1, 10}, {1, 0, 5}, {1, 1, 45}}) {
    for (int i = 0; i < k; ++i) {
      a.push_back(u);
      b.push_back(v);
    }
  }
  double kappa = cohen_kappa(a, b);
  double f1 = prf(ConfusionMatrix({{8, 2}, {2, 8}})).macro_f1;
  bool pass = bad == 0 && p5 == 0.0625 && std::abs(kappa - 0.70) <= 1e-12 && f1 == 0.8;
  return {pass, std::to_string(cases) + " wilcoxon cases, " + std::to_string(bad) +
                    " mismatches; p(1..5)=" + format_double(p5) + ", kappa=" +
                    format_double(kappa) + ", macro-F1=" + format_double(f1)};
}

std::map<std::string, std::map<std::string, double>> read_summary(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::map<std::string, std::map<std::string, double>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string_view> f = split(line, '\t');
    if (header.empty()) {
      for (auto h : f) header.emplace_back(h);
      continue;
    }
    for (size_t i = 1; i < f.size() && i < header.size(); ++i) {
      rows[std::string(f[0])][header[i]] = std::stod(std::string(f[i]));
    }
  }
  return rows;
}

Outcome synthetic_ablation(const fs::path& scratch) {
  auto t0 = Clock::now();
  fs::path out = scratch / "ablation";
  fs::path log = scratch / "ablation.log";
  int code = run_cli("--config " + data_file("config/acceptance.ini").string() + " --corpus " +
                         data_file("synth/history_dependent.tsv").string() + " --ontology " +
                         data_file("ontology/dao_fixture.tsv").string() + " --out " +
                         out.string() + " ablate --runs 5",
                     log);
  double secs = seconds_since(t0);
  if (code != 0) return {false, "ablate exited " + std::to_string(code) + ", see " + log.string()};
  auto rows = read_summary(out / "ablation_summary.tsv");
  double full = rows["Full"]["macro_f1"], nohist = rows["NoHistory"]["macro_f1"];
  double d_hist = rows["NoHistory"]["delta_f1"], d_attn = rows["NoAttention"]["delta_f1"],
         d_mask = rows["NoEntityMasking"]["delta_f1"];
  bool pass = full >= 0.90 && full - nohist >= 0.05 && d_hist > d_attn && d_hist > d_mask &&
              secs < 300.0;
  return {pass, "median macro-F1 Full " + format_fixed(full, 4) + ", NoHistory " +
                    format_fixed(nohist, 4) + "; deltas NoHistory " + format_fixed(d_hist, 4) +
                    ", NoAttention " + format_fixed(d_attn, 4) + ", NoEntityMasking " +
                    format_fixed(d_mask, 4) + "; " + num(secs) + " s"};
}

Outcome masking_invariance() {
  const Ontology& o = dao();
  std::map<DrugCategory, std::vector<std::string>> forms;
  for (const auto& [surface, entry] : o.lexicon()) {
    const Concept* c = o.find(entry.concept_id);
    if (!c) continue;
    std::optional<DrugCategory> cat;
    try {
      cat = o.super_category(*c);
    } catch (const AmbiguousCategoryError&) {
      continue;
    }
    if (!cat) continue;
    std::string probe = "used " + surface + " today";
    auto m = o.scan(probe);
    if (m.size() != 1 || m[0].begin != 5 || m[0].end != 5 + surface.size()) continue;
    forms[*cat].push_back(surface);
  }
  std::vector<DrugCategory> cats;
  for (const auto& [c, v] : forms) {
    if (v.size() >= 2) cats.push_back(c);
  }
  if (cats.empty()) return {false, "no category with two surface forms"};
  const std::vector<std::string> filler = {"feeling", "rough", "again", "after", "some",
                                           "need",    "more",  "cannot", "sleep"};
  size_t cases = 0, differ = 0;
  for (uint64_t seed = 0; seed < 120; ++seed) {
    Rng r(seed, "accept.mask");
    DrugCategory cat = cats[r.below(cats.size())];
    const auto& f = forms[cat];
    size_t i = r.below(f.size()), j = r.below(f.size() - 1);
    if (j >= i) ++j;
    std::string pre, post;
    for (size_t k = 0, n = r.below(4); k < n; ++k) pre += filler[r.below(filler.size())] + " ";
    for (size_t k = 0, n = r.below(4); k < n; ++k) post += " " + filler[r.below(filler.size())];
    AblationVariant v = seed % 2 ? AblationVariant::kNoAttention : AblationVariant::kFull;
    TemporalSUDModel m = tiny_model(v, seed % 3 == 0, AttentionKind::kAdditive, 500 + seed);
    Corpus a, b;
    for (Post p : tiny_corpus()) {
      Post q = p;
      if (p.id == "a3") {
        p.text = pre + f[i] + post;
        q.text = pre + f[j] + post;
      }
      a.add(p);
      b.add(q);
    }
    PostHistory h = history(a, 2, 2);
    if (temporal_forward(a, h, m, &o).probs != temporal_forward(b, h, m, &o).probs) ++differ;
    ++cases;
  }
  return {differ == 0 && cases >= 100,
          std::to_string(cases) + " swaps across " + std::to_string(cats.size()) +
              " categories, " + std::to_string(differ) + " changed the output"};
}

Outcome extraction() {
  std::ifstream in(fixture("listings.tsv"));
  std::vector<RawListing> raw = read_listings(in, "listings.tsv");
  if (raw.empty()) return {false, "fixture has no listings"};
  ListingRecord r = extract_listing(raw[0], dao()).record;
  std::string q = r.quantity ? format_amount(*r.quantity) : "-";
  std::string price = r.price ? format_price(*r.price) : "-";
  bool pass = r.substance == "heroin" && r.drug_class == "Opiate" && q == "50 gr" &&
              price == "BTC 0.0444" && r.ships_from == "Germany" && r.ships_to == "Worldwide";
  return {pass, "substance=" + r.substance.value_or("-") + " class=" + r.drug_class.value_or("-") +
                    " quantity=" + q + " price=" + price + " from=" +
                    r.ships_from.value_or("-") + " to=" + r.ships_to.value_or("-")};
}

Outcome splits_and_sampling() {
  size_t split_bad = 0, sample_bad = 0;
  double worst = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed, "accept.split");
    Corpus c;
    size_t n = 1 + r.below(400);
    double share = r.uniform(0.05, 0.95);
    for (size_t i = 0; i < n; ++i) {
      Post p = make_post("p" + std::to_string(i), "u" + std::to_string(r.below(20)),
                         static_cast<int64_t>(i), "text");
      if (!r.bernoulli(0.05)) p.sud = r.bernoulli(share) ? SudLabel::kSUDP : SudLabel::kSUDA;
      size_t tags = r.below(3);
      for (size_t k = 0; k < tags; ++k) p.drug_tags.insert(kAllCategories[r.below(kAllCategories.size())]);
      c.add(p);
    }
    SplitSpec spec;
    spec.seed = seed;
    SplitIndices idx = split_indices(c, spec);
    std::map<int, std::array<double, 3>> got;
    std::map<int, double> size;
    auto key = [&](size_t i) { return c[i].sud ? static_cast<int>(*c[i].sud) : -1; };
    for (size_t i = 0; i < n; ++i) size[key(i)] += 1;
    std::set<size_t> seen;
    for (int part = 0; part < 3; ++part) {
      const auto& v = part == 0 ? idx.train : part == 1 ? idx.dev : idx.test;
      for (size_t i : v) {
        got[key(i)][part] += 1;
        seen.insert(i);
      }
    }
    if (seen.size() != n || idx.train.size() + idx.dev.size() + idx.test.size() != n) ++split_bad;
    for (const auto& [k, s] : size) {
      const double ratio[3] = {0.75, 0.05, 0.20};
      for (int part = 0; part < 3; ++part) {
        double e = std::abs(got[k][part] - ratio[part] * s);
        worst = std::max(worst, e);
        if (e > 1.0 + 1e-9) ++split_bad;
      }
    }

    size_t per = 1 + r.below(30);
    for (StratifyBy by : {StratifyBy::kDrugCategory, StratifyBy::kSudLabel}) {
      Corpus a = stratified_sample(c, per, by, seed);
      Corpus b = stratified_sample(c, per, by, seed);
      std::vector<std::string> ia, ib;
      for (const Post& p : a) ia.push_back(p.id);
      for (const Post& p : b) ib.push_back(p.id);
      std::set<std::string> uniq(ia.begin(), ia.end());
      if (ia != ib || uniq.size() != ia.size()) ++sample_bad;
      auto stratum = [&](const Post& p) -> int {
        if (by == StratifyBy::kSudLabel) return p.sud ? static_cast<int>(*p.sud) : -1;
        return p.drug_tags.empty() ? -1 : static_cast<int>(*p.drug_tags.begin());
      };
      std::map<int, size_t> have, drawn;
      for (const Post& p : c) ++have[stratum(p)];
      for (const Post& p : a) ++drawn[stratum(p)];
      if (drawn.count(-1)) ++sample_bad;
      for (const auto& [k, cnt] : have) {
        if (k >= 0 && drawn[k] != std::min(per, cnt)) ++sample_bad;
      }
    }
  }
  return {split_bad == 0 && sample_bad == 0,
          "100 corpora; split violations " + std::to_string(split_bad) + " (worst deviation " +
              num(worst) + "), sampling violations " + std::to_string(sample_bad)};
}

Outcome determinism(const fs::path& scratch) {
  const std::string base = "--config " + data_file("config/smoke.ini").string() + " --ontology " +
                           data_file("ontology/dao_fixture.tsv").string() + " --lexicon " +
                           data_file("sentiment/lexicon.tsv").string();
  const std::vector<std::string> reports = {"train_sud.tsv", "ablation/ablation_runs.tsv",
                                            "ablation/ablation_summary.tsv", "topics.tsv",
                                            "timeseries.tsv"};
  auto t0 = Clock::now();
  auto pipeline = [&](const fs::path& d) -> int {
    fs::create_directories(d);
    fs::path log = d / "log.txt";
    auto p = [&](const std::string& f) { return (d / f).string(); };
    const std::vector<std::string> steps = {
        "--out " + p("synth.tsv") + " synth",
        "--corpus " + p("synth.tsv") + " --out " + p("tagged.tsv") + " prep tag",
        "--corpus " + p("tagged.tsv") + " --out " + p("masked.tsv") + " prep mask",
        "--corpus " + p("tagged.tsv") + " --out " + p("labeled.tsv") + " sentiment label",
        "--corpus " + p("labeled.tsv") + " --out " + p("sud.ckpt") + " --report " +
            p("train_sud.tsv") + " train --task sud",
        "--corpus " + p("labeled.tsv") + " --out " + p("ablation") + " ablate --runs 3",
        "--corpus " + p("labeled.tsv") + " --out " + p("topics.tsv") +
            " topics --group-by drug --period year --stop-words",
        "--corpus " + p("labeled.tsv") + " --out " + p("timeseries.tsv") +
            " report timeseries --group-by drug --metric sentiment"};
    for (const std::string& s : steps) {
      int code = run_cli(base + " " + s, log);
      if (code != 0) return code;
    }
    return 0;
  };
  int a = pipeline(scratch / "smoke_a"), b = pipeline(scratch / "smoke_b");
  double secs = seconds_since(t0);
  if (a != 0 || b != 0) {
    return {false, "pipeline exit codes " + std::to_string(a) + "/" + std::to_string(b)};
  }
  size_t same = 0;
  for (const std::string& f : reports) {
    std::string x = slurp(scratch / "smoke_a" / f);
    if (!x.empty() && x == slurp(scratch / "smoke_b" / f)) ++same;
  }
  return {same == reports.size(), std::to_string(same) + "/" + std::to_string(reports.size()) +
                                      " report files byte-identical, two runs in " + num(secs) +
                                      " s"};
}

}  // namespace

int main() {
  fs::path scratch = scratch_dir("acceptance");
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "sentiment rules", sentiment_rules},
      {4, "statistics", statistics},
      {5, "synthetic learning and ablation structure", [&] { return synthetic_ablation(scratch); }},
      {6, "masking invariance", masking_invariance},
      {7, "listing extraction", extraction},
      {8, "splits and sampling", splits_and_sampling},
      {9, "CLI determinism", [&] { return determinism(scratch); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
