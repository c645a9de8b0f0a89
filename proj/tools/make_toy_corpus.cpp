// Writes a synthetic annotated corpus for smoke tests and demos.
#include <iostream>

#include <CLI11.hpp>

#include "simstc/error.hpp"
#include "toy_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic annotated short-text corpus"};
  simstc::toy::ToyCorpusOptions o;
  std::string out;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--documents", o.documents)->capture_default_str();
  app.add_option("--classes", o.classes)->capture_default_str();
  app.add_option("--labeled-per-class", o.labeled_per_class)->capture_default_str();
  app.add_option("--keywords-per-class", o.keywords_per_class)->capture_default_str();
  app.add_option("--shared-words", o.shared_words)->capture_default_str();
  app.add_option("--entities-per-class", o.entities_per_class)->capture_default_str();
  app.add_option("--entity-dim", o.entity_dim)->capture_default_str();
  app.add_option("--keyword-rate", o.keyword_rate)->capture_default_str();
  app.add_option("--entity-free-rate", o.entity_free_rate)->capture_default_str();
  app.add_option("--word-dim", o.word_dim, "Also write word embeddings of this width")
      ->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto paths = simstc::toy::write_toy_corpus(out, simstc::toy::make_toy_corpus(o));
    std::cout << paths.corpus.string() << "\n" << paths.entity_embeddings.string() << "\n";
    if (!paths.word_embeddings.empty()) std::cout << paths.word_embeddings.string() << "\n";
  } catch (const simstc::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
