#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "simstc/corpus.hpp"
#include "simstc/graphs.hpp"
#include "toy_corpus.hpp"

namespace simstc::testing {

// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

AnnotatedCorpus corpus_from_jsonl(const std::string& jsonl, std::size_t min_word_freq = 1);
EmbeddingTable embeddings_from_text(const std::string& text, const Vocabulary& vocab);

// Six documents, three classes, every view populated. Word features come
// from an 8-dimensional embedding text, entity features are 4-dimensional.
GraphBundle six_doc_bundle();

// The generated 200-document, 2-class corpus, turned into graphs with the
// default graph configuration.
GraphBundle toy_bundle(const toy::ToyCorpusOptions& options = {});

}  // namespace simstc::testing
