#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace simstc::toy {

// Synthetic annotated corpus: every class owns a set of keywords and a
// cluster of entities; the remaining tokens come from a shared pool.
struct ToyCorpusOptions {
  std::size_t documents = 200;
  std::size_t classes = 2;
  std::size_t labeled_per_class = 20;  // half train, half validation
  std::size_t keywords_per_class = 12;
  std::size_t shared_words = 20;
  std::size_t entities_per_class = 6;
  std::size_t entity_dim = 16;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  double keyword_rate = 0.3;
  double entity_free_rate = 0.0;
  std::size_t word_dim = 0;  // 0: no word embedding file
  std::uint64_t seed = 1;
};

struct ToyCorpus {
  std::string corpus_jsonl;
  std::string entity_embeddings;
  std::string word_embeddings;  // empty when word_dim == 0
};

ToyCorpus make_toy_corpus(const ToyCorpusOptions& options = {});

struct ToyPaths {
  std::filesystem::path corpus;
  std::filesystem::path entity_embeddings;
  std::filesystem::path word_embeddings;  // empty when not written
};

// Writes corpus.jsonl, entities.vec and (if present) words.vec into dir.
ToyPaths write_toy_corpus(const std::filesystem::path& dir, const ToyCorpus& toy);

}  // namespace simstc::toy
