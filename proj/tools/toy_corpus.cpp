#include "toy_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <json.hpp>

#include "simstc/error.hpp"
#include "simstc/io.hpp"
#include "simstc/random.hpp"

namespace simstc::toy {
namespace {

constexpr const char* kSharedTags[] = {"DT", "VB", "IN", "NN", "RB"};
constexpr const char* kKeywordTags[] = {"NN", "JJ", "NNS"};

std::string name(const char* prefix, std::size_t a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, a);
  return buf;
}

std::string vector_line(const std::string& token, const std::vector<double>& v) {
  std::string line = token;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, " %.17g", x);
    line += buf;
  }
  return line + "\n";
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace

ToyCorpus make_toy_corpus(const ToyCorpusOptions& o) {
  if (o.classes == 0 || o.keywords_per_class == 0 || o.min_length == 0 || o.min_length > o.max_length) {
    throw Error("toy.options", "invalid toy corpus options");
  }
  ToyCorpus out;
  std::mt19937_64 rng = make_stream(o.seed, 0);

  auto keyword = [&](std::size_t c, std::size_t k) { return "c" + std::to_string(c) + name("kw", k); };
  auto shared = [&](std::size_t k) { return name("common", k); };
  auto entity = [&](std::size_t c, std::size_t k) { return "c" + std::to_string(c) + name("ent", k); };

  std::vector<std::size_t> labeled_seen(o.classes, 0);
  for (std::size_t d = 0; d < o.documents; ++d) {
    const std::size_t label = d % o.classes;
    const std::size_t length = o.min_length + pick(rng, o.max_length - o.min_length + 1);
    nlohmann::json tokens = nlohmann::json::array();
    nlohmann::json tags = nlohmann::json::array();
    bool has_keyword = false;
    for (std::size_t t = 0; t < length; ++t) {
      const bool use_keyword = o.shared_words == 0 || uniform(rng, 0.0, 1.0) < o.keyword_rate ||
                               (t + 1 == length && !has_keyword);
      if (use_keyword) {
        const std::size_t k = pick(rng, o.keywords_per_class);
        tokens.push_back(keyword(label, k));
        tags.push_back(kKeywordTags[k % 3]);
        has_keyword = true;
      } else {
        const std::size_t k = pick(rng, o.shared_words);
        tokens.push_back(shared(k));
        tags.push_back(kSharedTags[k % 5]);
      }
    }
    nlohmann::json entities = nlohmann::json::array();
    if (o.entities_per_class > 0 && uniform(rng, 0.0, 1.0) >= o.entity_free_rate) {
      const std::size_t count = 1 + pick(rng, 2);
      for (std::size_t e = 0; e < count; ++e) entities.push_back(entity(label, pick(rng, o.entities_per_class)));
    }
    std::string split = "test";
    if (labeled_seen[label] < o.labeled_per_class) {
      split = labeled_seen[label] < o.labeled_per_class / 2 ? "train" : "val";
      ++labeled_seen[label];
    }
    const nlohmann::json doc = {{"id", name("doc", d)}, {"tokens", tokens}, {"tags", tags},
                                {"entities", entities}, {"label", "class" + std::to_string(label)},
                                {"split", split}};
    out.corpus_jsonl += doc.dump() + "\n";
  }

  // Entity vectors: a random unit centroid per class plus small noise.
  std::mt19937_64 erng = make_stream(o.seed, 1);
  for (std::size_t c = 0; c < o.classes; ++c) {
    std::vector<double> centroid(o.entity_dim);
    double norm = 0.0;
    for (double& x : centroid) {
      x = uniform(erng, -1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : centroid) x /= norm;
    for (std::size_t k = 0; k < o.entities_per_class; ++k) {
      std::vector<double> v = centroid;
      for (double& x : v) x += uniform(erng, -0.1, 0.1);
      out.entity_embeddings += vector_line(entity(c, k), v);
    }
  }

  if (o.word_dim > 0) {
    std::mt19937_64 wrng = make_stream(o.seed, 2);
    auto random_vector = [&] {
      std::vector<double> v(o.word_dim);
      for (double& x : v) x = uniform(wrng, -0.5, 0.5);
      return v;
    };
    for (std::size_t c = 0; c < o.classes; ++c) {
      for (std::size_t k = 0; k < o.keywords_per_class; ++k) {
        out.word_embeddings += vector_line(keyword(c, k), random_vector());
      }
    }
    for (std::size_t k = 0; k < o.shared_words; ++k) out.word_embeddings += vector_line(shared(k), random_vector());
  }
  return out;
}

ToyPaths write_toy_corpus(const std::filesystem::path& dir, const ToyCorpus& toy) {
  std::filesystem::create_directories(dir);
  ToyPaths paths{dir / "corpus.jsonl", dir / "entities.vec", {}};
  write_file_atomic(paths.corpus, toy.corpus_jsonl);
  write_file_atomic(paths.entity_embeddings, toy.entity_embeddings);
  if (!toy.word_embeddings.empty()) {
    paths.word_embeddings = dir / "words.vec";
    write_file_atomic(paths.word_embeddings, toy.word_embeddings);
  }
  return paths;
}

}  // namespace simstc::toy
