#include "d2s/ontology.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "d2s/text.h"

namespace d2s {
namespace {

constexpr std::array<std::string_view, 8> kCategoryNames = {
    "Heroin",   "SyntheticHeroin", "PharmaceuticalFentanyl",
    "NonPharmaceuticalFentanyl", "Fentanyl", "Oxycodone",
    "Kratom",   "Opium",
};

constexpr std::array<std::string_view, 6> kConceptKindNames = {
    "substance_class",     "substance",       "route_of_administration",
    "dosage_unit", "physiological_effect", "substance_form",
};

constexpr std::array<std::string_view, 6> kTermKindNames = {
    "slang", "brand", "generic", "scientific", "street", "abbreviation",
};

// Lowercase alphanumerics only: "Non-Pharmaceutical Fentanyl" ->
// "nonpharmaceuticalfentanyl".
std::string fold_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) out += c;
    if (c >= 'A' && c <= 'Z') out += static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, size_t line, const std::string& msg) {
  std::ostringstream os;
  os << source;
  if (line) os << ":" << line;
  os << ": " << msg;
  throw InputError(os.str());
}

bool is_gazetteer_kind(ConceptKind k) {
  return k == ConceptKind::kSubstance || k == ConceptKind::kSubstanceClass;
}

}  // namespace

std::string_view category_name(DrugCategory c) {
  return kCategoryNames[static_cast<size_t>(c)];
}

std::optional<DrugCategory> parse_category(std::string_view name) {
  std::string folded = fold_name(name);
  for (size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (fold_name(kCategoryNames[i]) == folded) return static_cast<DrugCategory>(i);
  }
  return std::nullopt;
}

std::string_view concept_kind_name(ConceptKind k) {
  return kConceptKindNames[static_cast<size_t>(k)];
}

std::optional<ConceptKind> parse_concept_kind(std::string_view name) {
  for (size_t i = 0; i < kConceptKindNames.size(); ++i) {
    if (kConceptKindNames[i] == name) return static_cast<ConceptKind>(i);
  }
  return std::nullopt;
}

std::string_view term_kind_name(TermKind k) {
  return kTermKindNames[static_cast<size_t>(k)];
}

std::optional<TermKind> parse_term_kind(std::string_view name) {
  for (size_t i = 0; i < kTermKindNames.size(); ++i) {
    if (kTermKindNames[i] == name) return static_cast<TermKind>(i);
  }
  return std::nullopt;
}

std::string mask_token(std::optional<DrugCategory> c) {
  if (!c) return "[DRUG_UNK]";
  return "[DRUG_" + to_upper(category_name(*c)) + "]";
}

Ontology Ontology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ontology file: " + path.string());
  return parse(in, path.string());
}

Ontology Ontology::parse(std::istream& in, std::string_view source) {
  Ontology onto;
  std::map<std::string, size_t, std::less<>> concept_lines;
  std::map<std::string, size_t, std::less<>> lexicon_lines;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string_view> f = split(line, '\t');
    if (f[0] == "C") {
      if (f.size() < 4 || f.size() > 5) {
        fail(source, lineno, "concept record needs 4 or 5 tab-separated fields");
      }
      Concept c;
      c.id = std::string(trim(f[1]));
      if (c.id.empty()) fail(source, lineno, "empty concept id");
      auto kind = parse_concept_kind(trim(f[2]));
      if (!kind) fail(source, lineno, "unknown concept kind '" + std::string(f[2]) + "'");
      c.kind = *kind;
      c.canonical_name = std::string(trim(f[3]));
      if (f.size() == 5) {
        for (std::string_view p : split(f[4], ',')) {
          p = trim(p);
          if (!p.empty()) c.parents.emplace_back(p);
        }
      }
      if (onto.concepts_.count(c.id)) {
        fail(source, lineno, "duplicate concept id '" + c.id + "' (first defined on line " +
                                 std::to_string(concept_lines[c.id]) + ")");
      }
      concept_lines[c.id] = lineno;
      onto.concepts_.emplace(c.id, std::move(c));
    } else if (f[0] == "L") {
      if (f.size() != 4) fail(source, lineno, "lexicon record needs 4 tab-separated fields");
      LexiconEntry e;
      e.surface_form = normalize_term(f[1]);
      if (e.surface_form.empty()) {
        fail(source, lineno, "surface form '" + std::string(f[1]) + "' normalizes to nothing");
      }
      e.concept_id = std::string(trim(f[2]));
      auto tk = parse_term_kind(trim(f[3]));
      if (!tk) fail(source, lineno, "unknown term kind '" + std::string(f[3]) + "'");
      e.term_kind = *tk;
      if (onto.lexicon_.count(e.surface_form)) {
        fail(source, lineno, "duplicate surface form '" + e.surface_form +
                                 "' (first defined on line " +
                                 std::to_string(lexicon_lines[e.surface_form]) + ")");
      }
      lexicon_lines[e.surface_form] = lineno;
      onto.lexicon_.emplace(e.surface_form, std::move(e));
    } else {
      fail(source, lineno, "unknown record type '" + std::string(f[0]) + "'");
    }
  }
  onto.validate_and_index(source, concept_lines, lexicon_lines);
  return onto;
}

void Ontology::validate_and_index(
    std::string_view source, const std::map<std::string, size_t, std::less<>>& concept_lines,
    const std::map<std::string, size_t, std::less<>>& lexicon_lines) {
  for (const auto& [id, c] : concepts_) {
    for (const std::string& p : c.parents) {
      if (!concepts_.count(p)) {
        fail(source, concept_lines.at(id),
             "concept '" + id + "' has dangling parent id '" + p + "'");
      }
    }
  }
  for (const auto& [surface, e] : lexicon_) {
    if (!concepts_.count(e.concept_id)) {
      fail(source, lexicon_lines.at(surface),
           "surface form '" + surface + "' refers to unknown concept '" + e.concept_id + "'");
    }
  }

  // Cycle detection: iterative colouring DFS that records the active path.
  std::unordered_map<std::string_view, int> color;  // 0 white, 1 grey, 2 black
  for (const auto& [root_id, root] : concepts_) {
    if (color[root_id] != 0) continue;
    struct Frame {
      const Concept* c;
      size_t next;
    };
    std::vector<Frame> stack{{&root, 0}};
    color[root_id] = 1;
    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next == top.c->parents.size()) {
        color[top.c->id] = 2;
        stack.pop_back();
        continue;
      }
      const Concept& parent = concepts_.at(top.c->parents[top.next++]);
      int pc = color[parent.id];
      if (pc == 1) {
        std::vector<std::string> cycle;
        bool in_cycle = false;
        for (const Frame& fr : stack) {
          in_cycle = in_cycle || fr.c->id == parent.id;
          if (in_cycle) cycle.push_back(fr.c->id);
        }
        cycle.push_back(parent.id);
        fail(source, concept_lines.at(parent.id),
             "cycle in is-a graph: " + join(cycle, " -> "));
      }
      if (pc == 0) {
        color[parent.id] = 1;
        stack.push_back({&parent, 0});
      }
    }
  }

  for (const auto& [id, c] : concepts_) {
    auto cat = parse_category(c.canonical_name);
    if (!cat || !is_gazetteer_kind(c.kind)) continue;
    auto [it, inserted] = category_roots_.emplace(*cat, id);
    if (!inserted) {
      fail(source, concept_lines.at(id),
           "category " + std::string(category_name(*cat)) + " has two roots: '" + it->second +
               "' and '" + id + "'");
    }
  }

  for (const auto& [id, c] : concepts_) {
    try {
      category_cache_[id] = super_category(c);
    } catch (const AmbiguousCategoryError& e) {
      fail(source, concept_lines.at(id), e.what());
    }
  }

  for (const auto& [surface, e] : lexicon_) {
    if (!is_gazetteer_kind(concepts_.at(e.concept_id).kind)) continue;
    Phrase ph;
    for (std::string_view w : split(surface, ' ')) ph.words.emplace_back(w);
    ph.surface = surface;
    phrases_by_first_word_[ph.words.front()].push_back(std::move(ph));
  }
  for (auto& [w, list] : phrases_by_first_word_) {
    std::sort(list.begin(), list.end(), [](const Phrase& a, const Phrase& b) {
      if (a.words.size() != b.words.size()) return a.words.size() > b.words.size();
      return a.surface < b.surface;
    });
  }
}

void Ontology::write(std::ostream& out) const {
  out << "# concepts: C<TAB>id<TAB>kind<TAB>canonical<TAB>parents\n";
  for (const auto& [id, c] : concepts_) {
    out << "C\t" << id << '\t' << concept_kind_name(c.kind) << '\t' << c.canonical_name << '\t'
        << join(c.parents, ",") << '\n';
  }
  out << "# lexicon: L<TAB>surface<TAB>concept_id<TAB>term_kind\n";
  for (const auto& [surface, e] : lexicon_) {
    out << "L\t" << surface << '\t' << e.concept_id << '\t' << term_kind_name(e.term_kind)
        << '\n';
  }
}

const Concept* Ontology::find(std::string_view id) const {
  auto it = concepts_.find(id);
  return it == concepts_.end() ? nullptr : &it->second;
}

const LexiconEntry* Ontology::lookup(std::string_view term) const {
  auto it = lexicon_.find(normalize_term(term));
  return it == lexicon_.end() ? nullptr : &it->second;
}

const Concept* Ontology::resolve_term(std::string_view term) const {
  const LexiconEntry* e = lookup(term);
  return e ? find(e->concept_id) : nullptr;
}

std::optional<DrugCategory> Ontology::super_category(const Concept& c) const {
  if (auto it = category_cache_.find(c.id); it != category_cache_.end()) return it->second;

  std::map<DrugCategory, std::string> roots_reached;
  std::set<std::string_view> seen;
  std::vector<const Concept*> frontier{&c};
  while (!frontier.empty()) {
    const Concept* cur = frontier.back();
    frontier.pop_back();
    if (!seen.insert(cur->id).second) continue;
    for (const auto& [cat, root_id] : category_roots_) {
      if (root_id == cur->id) roots_reached.emplace(cat, root_id);
    }
    for (const std::string& p : cur->parents) {
      if (const Concept* pc = find(p)) frontier.push_back(pc);
    }
  }
  if (roots_reached.size() > 1) {
    std::vector<std::string> names;
    for (const auto& [cat, id] : roots_reached) names.emplace_back(category_name(cat));
    throw AmbiguousCategoryError("concept '" + c.id + "' reaches several category roots: " +
                                 join(names, ", "));
  }
  if (roots_reached.empty()) return std::nullopt;
  return roots_reached.begin()->first;
}

bool Ontology::reaches(const Concept& c, std::string_view ancestor_id) const {
  std::set<std::string_view> seen;
  std::vector<const Concept*> frontier{&c};
  while (!frontier.empty()) {
    const Concept* cur = frontier.back();
    frontier.pop_back();
    if (cur->id == ancestor_id) return true;
    if (!seen.insert(cur->id).second) continue;
    for (const std::string& p : cur->parents) {
      if (const Concept* pc = find(p)) frontier.push_back(pc);
    }
  }
  return false;
}

const Concept* Ontology::class_parent(const Concept& c) const {
  for (const std::string& p : c.parents) {
    const Concept* pc = find(p);
    if (pc && pc->kind == ConceptKind::kSubstanceClass) return pc;
  }
  return nullptr;
}

std::vector<std::string> Ontology::export_lexicon(const std::set<DrugCategory>& categories) const {
  std::vector<std::string> out;
  if (categories.empty()) return out;
  for (const auto& [surface, e] : lexicon_) {
    auto cat = super_category(concepts_.at(e.concept_id));
    if (cat && categories.count(*cat)) out.push_back(surface);
  }
  return out;  // lexicon_ is keyed by surface form: already sorted and unique
}

OntologyMetrics Ontology::metrics() const {
  OntologyMetrics m;
  m.concepts = concepts_.size();
  m.lexicon_entries = lexicon_.size();
  for (const auto& [id, c] : concepts_) m.relations += c.parents.size();
  m.uncategorized = uncategorized().size();
  return m;
}

std::vector<const Concept*> Ontology::uncategorized() const {
  std::vector<const Concept*> out;
  for (const auto& [id, c] : concepts_) {
    if (c.kind == ConceptKind::kSubstance && !super_category(c)) out.push_back(&c);
  }
  return out;
}

std::vector<GazetteerMatch> Ontology::scan(std::string_view text) const {
  std::vector<GazetteerMatch> out;
  if (phrases_by_first_word_.empty()) return out;
  std::vector<WordSpan> words = word_spans(text);
  size_t i = 0;
  while (i < words.size()) {
    auto it = phrases_by_first_word_.find(words[i].norm);
    bool matched = false;
    if (it != phrases_by_first_word_.end()) {
      for (const Phrase& ph : it->second) {
        if (i + ph.words.size() > words.size()) continue;
        bool ok = true;
        for (size_t k = 1; k < ph.words.size() && ok; ++k) {
          ok = words[i + k].norm == ph.words[k];
        }
        if (!ok) continue;
        const LexiconEntry& e = lexicon_.find(ph.surface)->second;
        out.push_back({words[i].begin, words[i + ph.words.size() - 1].end,
                       &concepts_.find(e.concept_id)->second, &e});
        i += ph.words.size();
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

}  // namespace d2s
