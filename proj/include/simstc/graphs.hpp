#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simstc/corpus.hpp"
#include "simstc/matrix.hpp"
#include "simstc/sparse.hpp"

namespace simstc {

// Sliding-window co-occurrence statistics for one sequence view.
struct WindowCounts {
  struct Pair {
    std::uint32_t first;  // first < second
    std::uint32_t second;
    std::uint64_t windows;
    friend bool operator==(const Pair&, const Pair&) = default;
  };

  std::size_t node_count = 0;
  std::uint64_t total_windows = 0;          // Omega
  std::vector<std::uint64_t> node_windows;  // Omega(v)
  std::vector<Pair> pairs;                  // Omega(v_i, v_j) > 0, sorted by (first, second)

  // Symmetric lookup; 0 for i == j or absent pairs.
  std::uint64_t pair_windows(std::uint32_t i, std::uint32_t j) const;
};

// A document of length L contributes max(1, L - window_size + 1) windows (none
// when L == 0). A window counts a node or a pair once no matter how many
// times they occur inside it.
WindowCounts count_windows(const AnnotatedCorpus& corpus, View view, std::size_t window_size);

// Positive PMI with natural log; no diagonal.
SparseMatrix pmi_adjacency(const WindowCounts& counts);

// Cosine similarity between entity embeddings, kept where strictly positive;
// no diagonal. Every vocabulary entity needs an embedding.
SparseMatrix entity_adjacency(const EmbeddingTable& embeddings, const Vocabulary& entity_vocab);

enum class TfidfVariant { kRaw, kLog, kNormalized };
std::string_view tfidf_variant_name(TfidfVariant v);
std::optional<TfidfVariant> parse_tfidf_variant(std::string_view name);

// N x |V| text-to-node weights: tf(i, j) * ln(N / df(j)). tf is the raw count
// (kRaw), 1 + ln(count) (kLog) or count / document length (kNormalized).
SparseMatrix tfidf_links(const AnnotatedCorpus& corpus, View view,
                         TfidfVariant variant = TfidfVariant::kRaw);

// Binary document-entity incidence.
SparseMatrix entity_links(const AnnotatedCorpus& corpus);

// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency);

struct ViewGraph {
  View view = View::kWord;
  Matrix features;         // |V| x d
  SparseMatrix adjacency;  // symmetric, positive entries, empty diagonal
  SparseMatrix norm_adj;

  std::size_t node_count() const { return features.rows; }
};

struct GraphConfig {
  std::size_t window_size = 5;
  TfidfVariant tfidf_variant = TfidfVariant::kRaw;
  std::size_t word_dim = 200;  // used when no word embedding file is given
  std::uint64_t seed = 0;      // random word features
};

// Everything training needs: the three component graphs, the three link
// matrices and per-document labels/splits.
struct GraphBundle {
  GraphConfig config;
  std::array<ViewGraph, 3> graphs;
  std::array<SparseMatrix, 3> links;  // indexed by View
  std::vector<std::string> doc_ids;
  std::vector<std::uint32_t> labels;
  std::vector<Split> splits;
  std::vector<std::string> label_names;
  std::array<std::vector<std::string>, 3> vocabularies;

  std::size_t num_docs() const { return labels.size(); }
  std::size_t num_classes() const { return label_names.size(); }
  const ViewGraph& graph(View v) const { return graphs[static_cast<std::size_t>(v)]; }
  const SparseMatrix& link(View v) const { return links[static_cast<std::size_t>(v)]; }
};

// Entities lacking an embedding are removed from the corpus (returned in
// `dropped`); the caller logs them.
AnnotatedCorpus restrict_to_embedded_entities(const AnnotatedCorpus& corpus,
                                              const EmbeddingTable& entity_embeddings,
                                              std::vector<std::string>* dropped = nullptr);

// Word features come from `word_embeddings` where available and are
// uniform(-0.01, 0.01) otherwise; tag features are one-hot; entity features
// are the entity embeddings.
GraphBundle build_graphs(const AnnotatedCorpus& corpus, const EmbeddingTable* word_embeddings,
                         const EmbeddingTable& entity_embeddings, const GraphConfig& config);

}  // namespace simstc
