// d2s command-line entry point. Every subcommand is a thin shell over a
// library call; run-wide settings live on the root command so a flat config
// file can carry them.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "d2s/baselines.h"
#include "d2s/corpus.h"
#include "d2s/error.h"
#include "d2s/eval_stats.h"
#include "d2s/listing.h"
#include "d2s/models.h"
#include "d2s/ontology.h"
#include "d2s/sentiment.h"
#include "d2s/text.h"
#include "d2s/topics.h"

namespace fs = std::filesystem;
using namespace d2s;

namespace {

struct RunConfig {
  uint64_t seed = 0;
  size_t jobs = 1;
  std::vector<uint64_t> seeds;

  std::string corpus, ontology, lexicon, out, report, model;

  ModelDims dims;
  size_t epochs = 10, head_epochs = 10;
  double lr = 1e-3, head_lr = 1e-3;
  size_t batch = 64, head_batch = 32;
  double dropout = 0.2;
  bool mask = true;
  bool time_feature = true;
  bool finetune = false;
  std::string history_key = "author";
  std::string attention = "additive";
  std::string split = "75:5:20";
};

void log(const std::string& msg) { std::cerr << "d2s: " << msg << '\n'; }

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required ") + flag);
  return value;
}

fs::path require_input(const std::string& path, const char* flag) {
  need(path, flag);
  if (!fs::exists(path)) throw InputError(std::string(flag) + " not found: " + path);
  return path;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void save_corpus(const fs::path& path, const Corpus& c) {
  std::ofstream out = open_out(path);
  write_corpus(out, c);
}

Corpus load_corpus(const RunConfig& rc) { return ingest(require_input(rc.corpus, "--corpus")); }
Ontology load_ontology(const RunConfig& rc) {
  return Ontology::load(require_input(rc.ontology, "--ontology"));
}

SplitSpec split_spec(const RunConfig& rc) {
  std::vector<std::string_view> f = split(rc.split, ':');
  SplitSpec s;
  s.seed = rc.seed;
  try {
    if (f.size() != 3) throw std::invalid_argument("");
    s.train = std::stoi(std::string(f[0]));
    s.dev = std::stoi(std::string(f[1]));
    s.test = std::stoi(std::string(f[2]));
  } catch (const std::exception&) {
    throw InputError("--split must look like 75:5:20, got '" + rc.split + "'");
  }
  return s;
}

TrainConfig head_config(const RunConfig& rc) {
  return {rc.head_epochs, rc.head_lr, rc.head_batch, rc.dropout, rc.seed, false};
}

TemporalTrainConfig temporal_config(const RunConfig& rc) {
  TemporalTrainConfig c;
  c.heads = head_config(rc);
  c.temporal = {rc.epochs, rc.lr, rc.batch, rc.dropout, rc.seed, false};
  c.opt.dims = rc.dims;
  c.opt.time_feature = rc.time_feature;
  c.opt.history_key = rc.history_key == "drug_stream" ? HistoryKey::kDrugStream : HistoryKey::kAuthor;
  c.opt.attention = rc.attention == "dot" ? AttentionKind::kDot : AttentionKind::kAdditive;
  c.opt.finetune_extractors = rc.finetune;
  c.split = split_spec(rc);
  return c;
}

void write_prf_header(std::ostream& out) {
  out << "model\tsplit\tprecision\trecall\tmacro_f1\taccuracy\n";
}

void write_prf(std::ostream& out, std::string_view model, std::string_view part, const PRF& m) {
  out << model << '\t' << part << '\t' << format_fixed(m.macro_precision, 6) << '\t'
      << format_fixed(m.macro_recall, 6) << '\t' << format_fixed(m.macro_f1, 6) << '\t'
      << format_fixed(m.accuracy, 6) << '\n';
}

// Rows of a tab-separated file with a header, as column -> value maps.
std::vector<std::map<std::string, std::string>> read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f = split(line, '\t');
    if (header.empty()) {
      for (std::string_view h : f) header.emplace_back(h);
      continue;
    }
    if (f.size() != header.size()) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    std::map<std::string, std::string> row;
    for (size_t i = 0; i < f.size(); ++i) row[header[i]] = std::string(f[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

double to_number(const std::string& s, const fs::path& where) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError(where.string() + ": not a number: '" + s + "'");
}

const std::string& column(const std::map<std::string, std::string>& row, const std::string& name,
                          const fs::path& where) {
  auto it = row.find(name);
  if (it == row.end()) throw InputError(where.string() + ": no column '" + name + "'");
  return it->second;
}

// The effective run settings, root first, then the invoked subcommand chain.
void log_config(const RunConfig& rc, const CLI::App& app) {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::vector<std::string> seeds;
  for (uint64_t s : rc.seeds) seeds.push_back(std::to_string(s));
  o << "seed=" << rc.seed << "\njobs=" << rc.jobs << "\nseeds=" << join(seeds, ",")
    << "\ncorpus=" << rc.corpus << "\nontology=" << rc.ontology << "\nlexicon=" << rc.lexicon
    << "\nout=" << rc.out << "\nreport=" << rc.report << "\nmodel=" << rc.model
    << "\ndim=" << rc.dims.d << "\ndim-h=" << rc.dims.d_h << "\nhidden=" << rc.dims.h
    << "\nattn-dim=" << rc.dims.attn << "\nfuse-dim=" << rc.dims.d_f
    << "\nwindow=" << rc.dims.window << "\nepochs=" << rc.epochs
    << "\nlr=" << format_double(rc.lr) << "\nbatch=" << rc.batch
    << "\nhead-epochs=" << rc.head_epochs << "\nhead-lr=" << format_double(rc.head_lr)
    << "\nhead-batch=" << rc.head_batch << "\ndropout=" << format_double(rc.dropout)
    << "\nmask=" << b(rc.mask) << "\ntime-feature=" << b(rc.time_feature)
    << "\nfinetune-extractors=" << b(rc.finetune) << "\nhistory-key=" << rc.history_key
    << "\nattention=" << rc.attention << "\nsplit=" << rc.split << '\n';
  std::string prefix;
  const CLI::App* cur = &app;
  while (true) {
    auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    prefix += cur->get_name() + ".";
    for (const CLI::Option* opt : cur->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      std::string v;
      if (opt->count() > 0) {
        v = opt->get_type_size() == 0 ? "true" : join(opt->results(), ",");
      } else {
        v = opt->get_type_size() == 0 ? "false" : opt->get_default_str();
      }
      o << prefix << opt->get_lnames().front() << '=' << v << '\n';
    }
  }
  std::cerr << "d2s: effective config\n" << o.str();
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ontology(const std::string& mode, const std::string& path) {
  Ontology o = Ontology::load(require_input(path, "--path"));
  OntologyMetrics m = o.metrics();
  std::cout << "concepts\t" << m.concepts << "\nlexicon_entries\t" << m.lexicon_entries
            << "\nrelations\t" << m.relations << "\nuncategorized\t" << m.uncategorized << '\n';
  if (mode != "stats") return;
  std::map<std::string, size_t> kinds;
  for (const auto& [id, c] : o.concepts()) ++kinds[std::string(concept_kind_name(c.kind))];
  for (const auto& [k, n] : kinds) std::cout << "kind." << k << '\t' << n << '\n';
  for (DrugCategory c : kAllCategories) {
    std::cout << "lexicon." << category_name(c) << '\t' << o.export_lexicon({c}).size() << '\n';
  }
}

void cmd_extract(const RunConfig& rc, const std::string& listings_path) {
  Ontology ont = load_ontology(rc);
  std::ifstream in(require_input(listings_path, "--listings"));
  if (!in) throw InputError("cannot read " + listings_path);
  std::vector<RawListing> raw = read_listings(in, listings_path);
  fs::path dir = need(rc.out, "--out");
  std::ofstream rec = open_out(dir / "records.tsv");
  std::ofstream diag = open_out(dir / "diagnostics.jsonl");
  std::ofstream sum = open_out(dir / "summary.tsv");
  write_record_header(rec);

  std::vector<ListingRecord> records;
  bool any_usd = false;
  for (size_t i = 0; i < raw.size(); ++i) {
    Extraction e = extract_listing(raw[i], ont);
    write_record(rec, e.record);
    if (!e.diagnostics.empty()) {
      nlohmann::json j = {{"listing", i + 1},
                          {"market", raw[i].market},
                          {"title", raw[i].title},
                          {"diagnostics", e.diagnostics}};
      diag << j.dump() << '\n';
    }
    if (raw[i].usd_value) any_usd = true;
    records.push_back(std::move(e.record));
  }
  write_summary_header(sum);
  if (raw.empty()) return;
  std::map<std::string, std::vector<size_t>> by_market;
  for (size_t i = 0; i < raw.size(); ++i) by_market[raw[i].market].push_back(i);
  auto summarize = [&](const std::vector<size_t>& idx) {
    std::vector<ListingRecord> rs;
    std::vector<Decimal> usd;
    int64_t withdrawals = 0;
    for (size_t i : idx) {
      rs.push_back(records[i]);
      usd.push_back(raw[i].usd_value.value_or(Decimal{}));
      withdrawals += raw[i].withdrawals.value_or(0);
    }
    MarketSummary s = any_usd ? summarize_market(rs, std::span<const Decimal>(usd))
                              : summarize_market(rs);
    s.withdrawals = withdrawals;
    return s;
  };
  std::vector<size_t> all;
  for (const auto& [market, idx] : by_market) {
    write_summary(sum, market, summarize(idx));
    all.insert(all.end(), idx.begin(), idx.end());
  }
  std::sort(all.begin(), all.end());
  write_summary(sum, "ALL", summarize(all));
  log("extracted " + std::to_string(raw.size()) + " listings into " + dir.string());
}

void cmd_prep(const std::string& mode, const RunConfig& rc, size_t per_stratum,
              const std::string& by) {
  Corpus c = load_corpus(rc);
  if (mode == "tag") {
    save_corpus(need(rc.out, "--out"), tag_drugs(c, load_ontology(rc)));
  } else if (mode == "mask") {
    Ontology ont = load_ontology(rc);
    std::vector<Post> posts;
    for (Post p : tag_drugs(c, ont)) {
      p.text = mask_entities(p.text, ont);
      posts.push_back(std::move(p));
    }
    save_corpus(need(rc.out, "--out"), Corpus(std::move(posts)));
  } else if (mode == "sample") {
    StratifyBy s = by == "sud" ? StratifyBy::kSudLabel
                   : by == "both" ? StratifyBy::kBoth
                                  : StratifyBy::kDrugCategory;
    save_corpus(need(rc.out, "--out"), stratified_sample(c, per_stratum, s, rc.seed));
  } else {
    Splits s = split(c, split_spec(rc));
    fs::path dir = need(rc.out, "--out");
    fs::create_directories(dir);
    save_corpus(dir / "train.tsv", s.train);
    save_corpus(dir / "dev.tsv", s.dev);
    save_corpus(dir / "test.tsv", s.test);
    log("split " + std::to_string(c.size()) + " posts: " + std::to_string(s.train.size()) + "/" +
        std::to_string(s.dev.size()) + "/" + std::to_string(s.test.size()));
  }
}

void cmd_synth(const RunConfig& rc, SynthConfig sc, const std::string& signal,
               std::string manifest) {
  sc.signal = signal == "text_only" ? SynthSignal::kTextOnly : SynthSignal::kHistoryDependent;
  sc.window = rc.dims.window;
  SynthCorpus s = synth_generate(sc, rc.seed);
  fs::path out = need(rc.out, "--out");
  save_corpus(out, s.corpus);
  if (manifest.empty()) manifest = out.string() + ".manifest";
  std::ofstream m = open_out(manifest);
  s.manifest.write(m);
  log("wrote " + std::to_string(s.corpus.size()) + " posts to " + out.string());
}

void cmd_sentiment(const RunConfig& rc, const std::string& pooling, double threshold) {
  SentimentLexicon lex = SentimentLexicon::load(require_input(rc.lexicon, "--lexicon"));
  SentimentOptions opt;
  opt.pooling = pooling == "average" ? Pooling::kAverage : Pooling::kSumNormalize;
  opt.constants.threshold = threshold;
  save_corpus(need(rc.out, "--out"), label_corpus(load_corpus(rc), lex, opt));
}

void cmd_train(const RunConfig& rc, const std::string& task_name_s, const std::string& variant_s) {
  Corpus c = load_corpus(rc);
  std::ofstream report;
  if (!rc.report.empty()) {
    report = open_out(rc.report);
    write_prf_header(report);
  }
  fs::path model_out = need(rc.out, "--out");
  if (task_name_s == "temporal") {
    auto v = parse_variant(variant_s);
    if (!v) throw InputError("unknown --variant '" + variant_s + "'");
    Ontology ont = load_ontology(rc);
    TemporalTrainResult r = temporal_train(c, ont, *v, temporal_config(rc));
    r.model.to_checkpoint().save(model_out);
    log("temporal " + std::string(variant_name(*v)) + ": best epoch " +
        std::to_string(r.best_epoch) + ", test macro-F1 " + format_fixed(r.test.macro_f1, 4));
    if (report) {
      write_prf(report, variant_name(*v), "dev", r.dev);
      write_prf(report, variant_name(*v), "test", r.test);
    }
    return;
  }
  Task task = *parse_task(task_name_s);
  Ontology ont;
  const Ontology* mask = nullptr;
  if (rc.mask) {
    ont = load_ontology(rc);
    mask = &ont;
  }
  Splits s = split(c, split_spec(rc));
  HeadTrainResult r = train_head(s.train, s.dev, task, head_config(rc), rc.dims, mask);
  PRF test = evaluate_head(r.model, s.test, mask);
  r.model.to_checkpoint().save(model_out);
  log(std::string(task_name(task)) + " head: best epoch " + std::to_string(r.best_epoch) +
      ", test macro-F1 " + format_fixed(test.macro_f1, 4));
  if (report) {
    write_prf(report, task_name(task), "dev", r.dev);
    write_prf(report, task_name(task), "test", test);
  }
}

void cmd_eval(const RunConfig& rc, const std::string& predictions) {
  Checkpoint ck = Checkpoint::load(require_input(rc.model, "--model"));
  Corpus c = load_corpus(rc);
  const std::string* task = ck.get_meta("task");
  if (!task) throw InputError(rc.model + ": checkpoint has no task");
  std::vector<int> gold, pred;
  std::vector<double> loss;
  std::string name;
  size_t k = 0;
  if (*task == "temporal") {
    TemporalSUDModel m = TemporalSUDModel::from_checkpoint(ck);
    Ontology ont = load_ontology(rc);
    name = variant_name(m.variant);
    k = kNumSudLabels;
    FeatureCache cache = build_feature_cache(c, m, &ont);
    HistoryIndex hist(c, m.opt.history_key);
    for (size_t i = 0; i < c.size(); ++i) {
      if (!c[i].sud) throw InputError("eval: post '" + c[i].id + "' has no sud label");
      TemporalExample ex = make_example(c, hist.history(i, m.opt.dims.window), m, cache);
      Vec p = temporal_forward(ex, m).probs;
      gold.push_back(ex.label);
      pred.push_back(p[0] >= p[1] ? 0 : 1);
      loss.push_back(cross_entropy(p, static_cast<size_t>(ex.label)));
    }
  } else {
    HeadModel h = HeadModel::from_checkpoint(ck);
    Ontology ont;
    if (h.masked) ont = load_ontology(rc);
    name = task_name(h.task);
    k = task_classes(h.task);
    for (const Post& p : c) {
      auto y = task_label(p, h.task);
      if (!y) throw InputError("eval: post '" + p.id + "' has no " + name + " label");
      auto ids = h.encoder.vocab.encode(prepare_text(p.text, h.masked ? &ont : nullptr));
      Vec probs = h.forward(ids, false, nullptr).probs;
      gold.push_back(*y);
      pred.push_back(static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
      loss.push_back(cross_entropy(probs, static_cast<size_t>(*y)));
    }
  }
  if (c.empty()) throw InputError("eval: empty corpus");
  PRF m = prf(confusion(gold, pred, k));
  std::ofstream report = open_out(need(rc.report, "--report"));
  write_prf_header(report);
  write_prf(report, name, "all", m);
  if (!predictions.empty()) {
    std::ofstream out = open_out(predictions);
    out << "id\tgold\tpred\tloss\n";
    for (size_t i = 0; i < c.size(); ++i) {
      out << c[i].id << '\t' << gold[i] << '\t' << pred[i] << '\t' << format_double(loss[i]) << '\n';
    }
  }
  log("eval " + name + ": macro-F1 " + format_fixed(m.macro_f1, 4));
}

std::vector<uint64_t> run_seeds(const RunConfig& rc, size_t runs) {
  if (!rc.seeds.empty()) return rc.seeds;
  if (runs == 0) throw InputError("--runs must be at least 1");
  std::vector<uint64_t> s;
  for (size_t i = 0; i < runs; ++i) s.push_back(rc.seed + i);
  return s;
}

void cmd_ablate(const RunConfig& rc, size_t runs, const std::vector<std::string>& variant_names) {
  Corpus c = load_corpus(rc);
  Ontology ont = load_ontology(rc);
  std::vector<AblationVariant> variants;
  for (const std::string& n : variant_names) {
    auto v = parse_variant(n);
    if (!v) throw InputError("unknown variant '" + n + "'");
    variants.push_back(*v);
  }
  if (variants.empty()) variants.assign(kAllVariants.begin(), kAllVariants.end());
  AblationReport rep =
      ablation_report(c, ont, temporal_config(rc), run_seeds(rc, runs), variants, rc.jobs);
  fs::path dir = need(rc.out, "--out");
  std::ofstream r = open_out(dir / "ablation_runs.tsv");
  rep.write_runs(r);
  std::ofstream s = open_out(dir / "ablation_summary.tsv");
  rep.write_summary(s);
  for (const VariantSummary& v : rep.summary) {
    log(std::string(variant_name(v.variant)) + ": median macro-F1 " + format_fixed(v.macro_f1, 4) +
        ", delta " + format_fixed(v.delta_f1, 4));
  }
}

void cmd_baseline(const RunConfig& rc, const std::string& name, BaselineConfig cfg) {
  auto b = parse_baseline(name);
  if (!b) throw InputError("unknown baseline '" + name + "'");
  Corpus c = load_corpus(rc);
  Ontology ont;
  if (rc.mask) ont = load_ontology(rc);
  cfg.train.seed = rc.seed;
  cfg.dims = rc.dims;
  cfg.split = split_spec(rc);
  cfg.history_key = temporal_config(rc).opt.history_key;
  BaselineResult r = run_baseline(c, rc.mask ? &ont : nullptr, *b, cfg);
  std::ofstream report = open_out(need(rc.report, "--report"));
  write_prf_header(report);
  write_prf(report, baseline_name(*b), "train", r.train);
  write_prf(report, baseline_name(*b), "dev", r.dev);
  write_prf(report, baseline_name(*b), "test", r.test);
  log(std::string(baseline_name(*b)) + ": test macro-F1 " + format_fixed(r.test.macro_f1, 4));
}

void cmd_topics(const RunConfig& rc, const std::string& period, const std::string& group_by,
                size_t k, bool smooth, bool stop_words, bool masked) {
  Corpus c = load_corpus(rc);
  Ontology ont;
  TopicOptions opt;
  opt.k = k;
  opt.group_by = group_by == "drug" ? TopicGroupBy::kDrugCategory : TopicGroupBy::kSource;
  opt.smooth_idf = smooth;
  if (stop_words) opt.stop_words = &default_stop_words();
  if (masked) {
    ont = load_ontology(rc);
    opt.mask_with = &ont;
  }
  std::map<std::pair<std::string, std::string>, TopicTable> tables;
  if (period == "none") {
    for (TopicTable& t : tfidf_topics(c, opt)) {
      std::string g = t.group;
      tables.emplace(std::make_pair(g, "all"), std::move(t));
    }
  } else {
    tables = topics_over_time(c, period == "quarter" ? Period::kQuarter : Period::kYear, opt);
  }
  std::ofstream out = open_out(need(rc.out, "--out"));
  write_topics(out, tables);
}

void cmd_timeseries(const RunConfig& rc, const std::string& group_by, const std::string& metric,
                    const std::string& period_s) {
  Corpus c = load_corpus(rc);
  Period period = period_s == "quarter" ? Period::kQuarter : Period::kYear;
  std::vector<std::string> labels;
  if (metric == "sentiment") {
    for (size_t i = 0; i < kNumSentiments; ++i) labels.emplace_back(sentiment_name(Sentiment(i)));
  } else if (metric == "emotion") {
    for (size_t i = 0; i < kNumEmotions; ++i) labels.emplace_back(emotion_name(Emotion(i)));
  } else {
    for (size_t i = 0; i < kNumSudLabels; ++i) labels.emplace_back(sud_name(SudLabel(i)));
  }
  std::map<std::pair<std::string, std::string>, std::vector<size_t>> counts;
  for (const Post& p : c) {
    std::optional<size_t> label;
    if (metric == "sentiment" && p.sentiment) label = static_cast<size_t>(*p.sentiment);
    if (metric == "emotion" && p.emotion) label = static_cast<size_t>(*p.emotion);
    if (metric == "sud" && p.sud) label = static_cast<size_t>(*p.sud);
    if (!label) continue;
    std::vector<std::string> groups;
    if (group_by == "drug") {
      for (DrugCategory d : p.drug_tags) groups.emplace_back(category_name(d));
    } else {
      groups.push_back(p.source);
    }
    std::string per = period_label(p.timestamp, period);
    for (const std::string& g : groups) {
      auto& v = counts[{g, per}];
      v.resize(labels.size());
      ++v[*label];
    }
  }
  std::ofstream out = open_out(need(rc.out, "--out"));
  out << "group\tperiod\tlabel\tcount\n";
  for (const auto& [key, v] : counts) {
    for (size_t i = 0; i < labels.size(); ++i) {
      out << key.first << '\t' << key.second << '\t' << labels[i] << '\t' << v[i] << '\n';
    }
  }
}

void write_or_print(const RunConfig& rc, const std::string& text) {
  if (rc.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out = open_out(rc.out);
    out << text;
  }
}

void cmd_wilcoxon(const RunConfig& rc, const std::string& pairing, const std::string& x_path,
                  const std::string& y_path, const std::string& a, const std::string& b,
                  const std::string& metric, const std::string& zeros) {
  std::vector<double> x, y;
  if (pairing == "runs") {
    // One ablation runs table; pairs the two variants by run seed.
    fs::path p = require_input(x_path, "--x");
    std::map<std::string, double> xa, yb;
    for (const auto& row : read_table(p)) {
      const std::string& v = column(row, "variant", p);
      double value = to_number(column(row, metric, p), p);
      if (v == a) xa[column(row, "run_seed", p)] = value;
      if (v == b) yb[column(row, "run_seed", p)] = value;
    }
    for (const auto& [seed, v] : xa) {
      auto it = yb.find(seed);
      if (it == yb.end()) continue;
      x.push_back(v);
      y.push_back(it->second);
    }
  } else {
    // Two prediction files from `eval`; pairs examples by id.
    fs::path px = require_input(x_path, "--x"), py = require_input(y_path, "--y");
    std::map<std::string, double> other;
    for (const auto& row : read_table(py)) {
      other[column(row, "id", py)] = to_number(column(row, metric, py), py);
    }
    for (const auto& row : read_table(px)) {
      auto it = other.find(column(row, "id", px));
      if (it == other.end()) continue;
      x.push_back(to_number(column(row, metric, px), px));
      y.push_back(it->second);
    }
  }
  if (x.empty()) throw InputError("wilcoxon: no paired samples");
  WilcoxonResult r =
      wilcoxon_signed_rank(x, y, zeros == "pratt" ? ZeroHandling::kPratt : ZeroHandling::kWilcox);
  std::ostringstream s;
  s << "n\tn_effective\tw\tw_plus\tw_minus\tp_value\tmethod\n"
    << x.size() << '\t' << r.n_effective << '\t' << format_double(r.w) << '\t'
    << format_double(r.w_plus) << '\t' << format_double(r.w_minus) << '\t'
    << format_double(r.p_value) << '\t' << wilcoxon_method_name(r.method) << '\n';
  write_or_print(rc, s.str());
}

void cmd_kappa(const RunConfig& rc, const std::string& x_path, const std::string& y_path,
               const std::string& label) {
  Corpus a = ingest(require_input(x_path, "--x"));
  Corpus b = ingest(require_input(y_path, "--y"));
  Task t = *parse_task(label);
  std::vector<int> la, lb;
  for (const Post& p : a) {
    auto j = b.index_of(p.id);
    if (!j) continue;
    auto u = task_label(p, t), v = task_label(b[*j], t);
    if (!u || !v) continue;
    la.push_back(*u);
    lb.push_back(*v);
  }
  if (la.empty()) throw InputError("kappa: no posts labeled in both files");
  std::ostringstream s;
  s << "n\tkappa\n" << la.size() << '\t' << format_double(cohen_kappa(la, lb)) << '\n';
  write_or_print(rc, s.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d2s: drug-to-SUD analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI or TOML file with run settings (flags override it)");
  app.get_config_ptr()->check(CLI::ExistingFile);

  RunConfig rc;
  app.add_option("--seed", rc.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--jobs", rc.jobs, "Worker cap for the ablation harness")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seeds", rc.seeds, "Explicit run seeds for ablate (overrides --runs)");
  app.add_option("--corpus", rc.corpus, "Corpus file");
  app.add_option("--ontology", rc.ontology, "Ontology file");
  app.add_option("--lexicon", rc.lexicon, "Sentiment lexicon file");
  app.add_option("--out", rc.out, "Output file or directory");
  app.add_option("--report", rc.report, "Metrics report file");
  app.add_option("--model", rc.model, "Model checkpoint to read");
  app.add_option("--dim", rc.dims.d, "Encoder width D")->check(CLI::Range(2, 4096))->capture_default_str();
  app.add_option("--dim-h", rc.dims.d_h, "Head hidden width D_h")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--hidden", rc.dims.h, "LSTM hidden size per direction H")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--attn-dim", rc.dims.attn, "Attention width")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--fuse-dim", rc.dims.d_f, "Fusion dense width D_f")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--window", rc.dims.window, "History length L")->capture_default_str();
  app.add_option("--epochs", rc.epochs, "Temporal and baseline epochs")->capture_default_str();
  app.add_option("--lr", rc.lr, "Temporal and baseline learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--batch", rc.batch, "Temporal and baseline batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--head-epochs", rc.head_epochs, "Task head epochs")->capture_default_str();
  app.add_option("--head-lr", rc.head_lr, "Task head learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--head-batch", rc.head_batch, "Task head batch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--dropout", rc.dropout, "Dropout probability")->check(CLI::Range(0.0, 0.999))->capture_default_str();
  app.add_flag("--mask,!--no-mask", rc.mask, "Entity masking for head training and baselines")->capture_default_str();
  app.add_flag("--time-feature,!--no-time-feature", rc.time_feature, "Append ln(1+days) to each history step")
      ->capture_default_str();
  app.add_flag("--finetune-extractors", rc.finetune, "Update the extractor heads during temporal training");
  app.add_option("--history-key", rc.history_key, "History grouping")
      ->check(CLI::IsMember({"author", "drug_stream"}))
      ->capture_default_str();
  app.add_option("--attention", rc.attention, "Attention scoring")
      ->check(CLI::IsMember({"additive", "dot"}))
      ->capture_default_str();
  app.add_option("--split", rc.split, "train:dev:test percentages")->capture_default_str();

  // ontology validate|stats
  std::string onto_path;
  auto* onto = app.add_subcommand("ontology", "Validate an ontology or print its metrics");
  onto->require_subcommand(1);
  auto* onto_validate = onto->add_subcommand("validate", "Load and validate");
  auto* onto_stats = onto->add_subcommand("stats", "Metrics plus per-kind and per-category counts");
  for (auto* s : {onto_validate, onto_stats}) s->add_option("--path", onto_path, "Ontology file");

  // extract
  std::string listings;
  auto* extract = app.add_subcommand("extract", "Structured records from marketplace listings");
  extract->add_option("--listings", listings, "Listings file")->required();

  // prep tag|mask|sample|split
  size_t per_stratum = 0;
  std::string stratify = "drug";
  auto* prep = app.add_subcommand("prep", "Corpus preparation");
  prep->require_subcommand(1);
  auto* prep_tag = prep->add_subcommand("tag", "Attach drug-category tags");
  auto* prep_mask = prep->add_subcommand("mask", "Tag, then replace drug mentions with mask tokens");
  auto* prep_sample = prep->add_subcommand("sample", "Stratified sample");
  prep_sample->add_option("--per-stratum", per_stratum, "Posts per stratum")->required();
  prep_sample->add_option("--by", stratify, "Strata")
      ->check(CLI::IsMember({"drug", "sud", "both"}))
      ->capture_default_str();
  auto* prep_split = prep->add_subcommand("split", "Label-stratified train/dev/test files");

  // synth
  SynthConfig sc;
  sc.noise = 0.1;
  std::string signal = "history_dependent", manifest;
  auto* synth = app.add_subcommand("synth", "Synthetic corpus with a planted rule");
  synth->add_option("--authors", sc.n_authors)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--posts-per-author", sc.posts_per_author)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--signal", signal)
      ->check(CLI::IsMember({"history_dependent", "text_only"}))
      ->capture_default_str();
  synth->add_option("--noise", sc.noise)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--keyword-rate", sc.keyword_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--manifest", manifest, "Manifest path (default: <out>.manifest)");

  // sentiment label
  std::string pooling = "sum";
  double threshold = 0.05;
  auto* sentiment = app.add_subcommand("sentiment", "Rule-based sentiment");
  sentiment->require_subcommand(1);
  auto* sent_label = sentiment->add_subcommand("label", "Overwrite sentiment labels");
  sent_label->add_option("--pooling", pooling)->check(CLI::IsMember({"sum", "average"}))->capture_default_str();
  sent_label->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  // train / eval / ablate / baseline
  std::string task = "sud", variant = "Full";
  auto* train = app.add_subcommand("train", "Train a task head or the temporal model");
  train->add_option("--task", task)
      ->check(CLI::IsMember({"sentiment", "emotion", "sud", "temporal"}))
      ->required();
  train->add_option("--variant", variant, "Temporal variant")->capture_default_str();

  std::string predictions;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a corpus");
  eval->add_option("--predictions", predictions, "Per-post id, gold, pred, loss table");

  size_t runs = 10;
  std::vector<std::string> variants;
  auto* ablate = app.add_subcommand("ablate", "Ablation medians over runs");
  ablate->add_option("--runs", runs)->capture_default_str();
  ablate->add_option("--variants", variants, "Subset of Full NoAttention NoEntityMasking NoHistory");

  std::string baseline;
  auto* base = app.add_subcommand("baseline", "Comparison baselines");
  base->add_option("--name", baseline, "LR_POS_TFIDF, H_RNN or H_LSTM")->required();
  BaselineConfig bcfg;
  base->add_option("--epochs", bcfg.train.epochs, "Baseline epochs")->capture_default_str();
  base->add_option("--lr", bcfg.train.lr, "Adam learning rate (H_RNN, H_LSTM)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  base->add_option("--sgd-lr", bcfg.lr_sgd, "Gradient descent step (LR_POS_TFIDF)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  base->add_option("--batch", bcfg.train.batch)->check(CLI::PositiveNumber)->capture_default_str();

  // topics
  std::string period = "none", group_by = "source";
  size_t k = 10;
  bool smooth = false, stop = false, masked_topics = false;
  auto* topics = app.add_subcommand("topics", "TF-IDF n-gram topics per group");
  topics->add_option("--period", period)->check(CLI::IsMember({"none", "year", "quarter"}))->capture_default_str();
  topics->add_option("--group-by", group_by)->check(CLI::IsMember({"source", "drug"}))->capture_default_str();
  topics->add_option("-k,--top", k)->check(CLI::PositiveNumber)->capture_default_str();
  topics->add_flag("--smooth-idf", smooth);
  topics->add_flag("--stop-words", stop, "Drop stop-word unigrams");
  topics->add_flag("--masked", masked_topics, "Mask drug mentions first (needs --ontology)");

  // report timeseries
  std::string ts_group = "drug", metric = "sentiment", ts_period = "year";
  auto* report = app.add_subcommand("report", "Plot-ready tables");
  report->require_subcommand(1);
  auto* ts = report->add_subcommand("timeseries", "Label counts per group and period");
  ts->add_option("--group-by", ts_group)->check(CLI::IsMember({"drug", "source"}))->capture_default_str();
  ts->add_option("--metric", metric)->check(CLI::IsMember({"sentiment", "emotion", "sud"}))->capture_default_str();
  ts->add_option("--period", ts_period)->check(CLI::IsMember({"year", "quarter"}))->capture_default_str();

  // stats wilcoxon|kappa
  std::string pairing, x_path, y_path, a = "Full", b = "NoHistory", column_name,
                                       zeros = "wilcox", label = "sentiment";
  auto* stats = app.add_subcommand("stats", "Significance and agreement");
  stats->require_subcommand(1);
  auto* wil = stats->add_subcommand("wilcoxon", "Paired signed-rank test");
  wil->add_option("--pairing", pairing, "runs: ablation runs table; examples: two eval prediction tables")
      ->check(CLI::IsMember({"runs", "examples"}))
      ->required();
  wil->add_option("--x", x_path)->required();
  wil->add_option("--y", y_path);
  wil->add_option("--a", a, "First variant (runs pairing)")->capture_default_str();
  wil->add_option("--b", b, "Second variant (runs pairing)")->capture_default_str();
  wil->add_option("--column", column_name, "Value column (default macro_f1 for runs, loss for examples)");
  wil->add_option("--zeros", zeros)->check(CLI::IsMember({"wilcox", "pratt"}))->capture_default_str();
  auto* kap = stats->add_subcommand("kappa", "Cohen's kappa between two labeled corpora");
  kap->add_option("--x", x_path)->required();
  kap->add_option("--y", y_path)->required();
  kap->add_option("--label", label)->check(CLI::IsMember({"sentiment", "emotion", "sud"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  log_config(rc, app);

  try {
    if (onto->parsed()) {
      cmd_ontology(onto_stats->parsed() ? "stats" : "validate",
                   onto_path.empty() ? rc.ontology : onto_path);
    } else if (extract->parsed()) {
      cmd_extract(rc, listings);
    } else if (prep->parsed()) {
      std::string mode = prep_tag->parsed()    ? "tag"
                         : prep_mask->parsed() ? "mask"
                         : prep_sample->parsed() ? "sample"
                                                 : "split";
      (void)prep_split;
      cmd_prep(mode, rc, per_stratum, stratify);
    } else if (synth->parsed()) {
      cmd_synth(rc, sc, signal, manifest);
    } else if (sent_label->parsed()) {
      cmd_sentiment(rc, pooling, threshold);
    } else if (train->parsed()) {
      cmd_train(rc, task, variant);
    } else if (eval->parsed()) {
      cmd_eval(rc, predictions);
    } else if (ablate->parsed()) {
      cmd_ablate(rc, runs, variants);
    } else if (base->parsed()) {
      cmd_baseline(rc, baseline, bcfg);
    } else if (topics->parsed()) {
      cmd_topics(rc, period, group_by, k, smooth, stop, masked_topics);
    } else if (ts->parsed()) {
      cmd_timeseries(rc, ts_group, metric, ts_period);
    } else if (wil->parsed()) {
      if (column_name.empty()) column_name = pairing == "runs" ? "macro_f1" : "loss";
      cmd_wilcoxon(rc, pairing, x_path, y_path, a, b, column_name, zeros);
    } else if (kap->parsed()) {
      cmd_kappa(rc, x_path, y_path, label);
    }
  } catch (const InputError& e) {
    std::cerr << "d2s: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "d2s: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
