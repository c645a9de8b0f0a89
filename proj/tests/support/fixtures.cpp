#include "fixtures.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>

#include <unistd.h>

namespace simstc::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("simstc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

AnnotatedCorpus corpus_from_jsonl(const std::string& jsonl, std::size_t min_word_freq) {
  std::istringstream in(jsonl);
  CorpusOptions options;
  options.min_word_freq = min_word_freq;
  return parse_corpus(in, options);
}

EmbeddingTable embeddings_from_text(const std::string& text, const Vocabulary& vocab) {
  std::istringstream in(text);
  return parse_embeddings(in, vocab);
}

GraphBundle six_doc_bundle() {
  const std::string jsonl =
      R"({"id":"a","tokens":["apple","pie","sweet","apple"],"tags":["NN","NN","JJ","NN"],"entities":["fruit"],"label":"food","split":"train"}
{"id":"b","tokens":["goal","match","striker"],"tags":["NN","NN","NN"],"entities":["football","club"],"label":"sport","split":"train"}
{"id":"c","tokens":["vote","party","elect","law"],"tags":["VB","NN","VB","NN"],"entities":["parliament"],"label":"politics","split":"train"}
{"id":"d","tokens":["sweet","pie","bake"],"tags":["JJ","NN","VB"],"entities":[],"label":"food","split":"val"}
{"id":"e","tokens":["striker","goal","club"],"tags":["NN","NN","NN"],"entities":["club"],"label":"sport","split":"test"}
{"id":"f","tokens":["law","party","vote","quickly"],"tags":["NN","NN","VB","RB"],"entities":["parliament","club"],"label":"politics","split":"test"}
)";
  const AnnotatedCorpus corpus = corpus_from_jsonl(jsonl);
  std::string words;
  const char* raw[] = {"apple", "bake", "club", "elect", "goal", "law", "match", "party",
                       "pie", "quickly", "striker", "sweet", "vote"};
  for (std::size_t i = 0; i < std::size(raw); ++i) {
    words += raw[i];
    for (std::size_t k = 0; k < 8; ++k) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.3f", 0.1 * static_cast<double>((i * 7 + k * 3) % 11) - 0.5);
      words += buf;
    }
    words += "\n";
  }
  const std::string entities =
      "club 0.9 0.1 0.2 -0.1\n"
      "football 0.8 0.3 0.1 0.0\n"
      "fruit -0.2 0.9 0.1 0.3\n"
      "parliament 0.1 -0.3 0.9 0.2\n";
  const EmbeddingTable word_emb = embeddings_from_text(words, corpus.word_vocab);
  const EmbeddingTable entity_emb = embeddings_from_text(entities, corpus.entity_vocab);
  GraphConfig config;
  config.window_size = 3;
  return build_graphs(corpus, &word_emb, entity_emb, config);
}

GraphBundle toy_bundle(const toy::ToyCorpusOptions& options) {
  const toy::ToyCorpus toy = toy::make_toy_corpus(options);
  const AnnotatedCorpus corpus = corpus_from_jsonl(toy.corpus_jsonl, CorpusOptions{}.min_word_freq);
  const EmbeddingTable entity_emb = embeddings_from_text(toy.entity_embeddings, corpus.entity_vocab);
  if (toy.word_embeddings.empty()) return build_graphs(corpus, nullptr, entity_emb, GraphConfig{});
  const EmbeddingTable word_emb = embeddings_from_text(toy.word_embeddings, corpus.word_vocab);
  return build_graphs(corpus, &word_emb, entity_emb, GraphConfig{});
}

}  // namespace simstc::testing
