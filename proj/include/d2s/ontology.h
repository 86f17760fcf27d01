#ifndef D2S_ONTOLOGY_H_
#define D2S_ONTOLOGY_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "d2s/error.h"

namespace d2s {

enum class ConceptKind {
  kSubstanceClass,
  kSubstance,
  kRouteOfAdministration,
  kDosageUnit,
  kPhysiologicalEffect,
  kSubstanceForm,
};

enum class TermKind { kSlang, kBrand, kGeneric, kScientific, kStreet, kAbbreviation };

// The eight social-media drug categories. Closed set.
enum class DrugCategory {
  kHeroin,
  kSyntheticHeroin,
  kPharmaceuticalFentanyl,
  kNonPharmaceuticalFentanyl,
  kFentanyl,
  kOxycodone,
  kKratom,
  kOpium,
};

inline constexpr std::array<DrugCategory, 8> kAllCategories = {
    DrugCategory::kHeroin,
    DrugCategory::kSyntheticHeroin,
    DrugCategory::kPharmaceuticalFentanyl,
    DrugCategory::kNonPharmaceuticalFentanyl,
    DrugCategory::kFentanyl,
    DrugCategory::kOxycodone,
    DrugCategory::kKratom,
    DrugCategory::kOpium,
};

std::string_view category_name(DrugCategory c);  // "SyntheticHeroin"
std::optional<DrugCategory> parse_category(std::string_view name);
std::string_view concept_kind_name(ConceptKind k);
std::optional<ConceptKind> parse_concept_kind(std::string_view name);
std::string_view term_kind_name(TermKind k);
std::optional<TermKind> parse_term_kind(std::string_view name);

// Mask token for a category ("[DRUG_SYNTHETICHEROIN]"), or "[DRUG_UNK]".
std::string mask_token(std::optional<DrugCategory> c);

struct Concept {
  std::string id;
  std::string canonical_name;
  ConceptKind kind = ConceptKind::kSubstance;
  std::vector<std::string> parents;
};

struct LexiconEntry {
  std::string surface_form;  // normalize_term() applied
  std::string concept_id;
  TermKind term_kind = TermKind::kGeneric;
};

struct OntologyMetrics {
  size_t concepts = 0;
  size_t lexicon_entries = 0;
  size_t relations = 0;      // total parent links
  size_t uncategorized = 0;  // substance concepts reaching no category root

  bool operator==(const OntologyMetrics&) const = default;
};

// Raised by super_category when a concept reaches two category roots.
class AmbiguousCategoryError : public InputError {
 public:
  using InputError::InputError;
};

// A longest-match hit of a lexicon phrase in running text.
struct GazetteerMatch {
  size_t begin = 0;  // byte offsets into the scanned text
  size_t end = 0;
  const Concept* concept_ptr = nullptr;
  const LexiconEntry* entry = nullptr;
};

// Validated, immutable concept hierarchy plus surface-form lexicon.
//
// Category roots are concepts whose canonical name, with non-alphanumerics
// removed and case folded, equals a DrugCategory name ("Non-Pharmaceutical
// Fentanyl" is the root of kNonPharmaceuticalFentanyl).
class Ontology {
 public:
  Ontology() = default;

  static Ontology load(const std::filesystem::path& path);
  // `source` names the input in error messages.
  static Ontology parse(std::istream& in, std::string_view source = "<input>");
  void write(std::ostream& out) const;

  const Concept* find(std::string_view id) const;
  const Concept* resolve_term(std::string_view term) const;
  const LexiconEntry* lookup(std::string_view term) const;

  // Unique category root reachable from `c` (including `c` itself), or
  // nullopt for uncategorized concepts. Throws AmbiguousCategoryError.
  std::optional<DrugCategory> super_category(const Concept& c) const;
  // True when `ancestor_id` is `c` or one of its transitive parents.
  bool reaches(const Concept& c, std::string_view ancestor_id) const;
  // First parent of kind substance_class, if any.
  const Concept* class_parent(const Concept& c) const;

  std::vector<std::string> export_lexicon(const std::set<DrugCategory>& categories) const;
  OntologyMetrics metrics() const;
  std::vector<const Concept*> uncategorized() const;

  // Longest-match, left-to-right, word-boundary anchored scan for lexicon
  // phrases whose concept is a substance or substance class.
  std::vector<GazetteerMatch> scan(std::string_view text) const;

  const std::map<std::string, Concept, std::less<>>& concepts() const { return concepts_; }
  const std::map<std::string, LexiconEntry, std::less<>>& lexicon() const { return lexicon_; }
  const std::map<DrugCategory, std::string>& category_roots() const { return category_roots_; }
  bool empty() const { return concepts_.empty() && lexicon_.empty(); }

 private:
  void validate_and_index(std::string_view source,
                          const std::map<std::string, size_t, std::less<>>& concept_lines,
                          const std::map<std::string, size_t, std::less<>>& lexicon_lines);

  std::map<std::string, Concept, std::less<>> concepts_;
  std::map<std::string, LexiconEntry, std::less<>> lexicon_;
  std::map<DrugCategory, std::string> category_roots_;
  std::unordered_map<std::string, std::optional<DrugCategory>> category_cache_;

  struct Phrase {
    std::vector<std::string> words;
    std::string surface;  // key into lexicon_
  };
  std::unordered_map<std::string, std::vector<Phrase>> phrases_by_first_word_;
};

}  // namespace d2s

#endif  // D2S_ONTOLOGY_H_
