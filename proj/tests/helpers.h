#ifndef D2S_TESTS_HELPERS_H_
#define D2S_TESTS_HELPERS_H_

#include <filesystem>
#include <sstream>
#include <string>

#include "d2s/corpus.h"
#include "d2s/ontology.h"

namespace d2s::test {

inline std::filesystem::path data_file(const std::string& rel) {
  return std::filesystem::path(D2S_DATA_DIR) / rel;
}

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(D2S_TEST_DATA_DIR) / rel;
}

inline const Ontology& dao() {
  static const Ontology o = Ontology::load(data_file("ontology/dao_fixture.tsv"));
  return o;
}

inline Ontology ontology_from(const std::string& text) {
  std::istringstream in(text);
  return Ontology::parse(in, "<test>");
}

inline Post make_post(std::string id, std::string author, int64_t ts, std::string text) {
  Post p;
  p.id = std::move(id);
  p.author = std::move(author);
  p.source = "opiates";
  p.timestamp = ts;
  p.text = std::move(text);
  return p;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  std::filesystem::path p = std::filesystem::temp_directory_path() / ("d2s_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace d2s::test

#endif  // D2S_TESTS_HELPERS_H_
