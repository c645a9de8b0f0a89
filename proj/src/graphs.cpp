#include "simstc/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "simstc/error.hpp"
#include "simstc/random.hpp"

namespace simstc {
namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

void require_sequence_view(View view, const char* op) {
  if (view == View::kEntity) {
    throw Error("graphs.view", std::string(op) + " is defined for the word and tag views only");
  }
}

}  // namespace

std::uint64_t WindowCounts::pair_windows(std::uint32_t i, std::uint32_t j) const {
  if (i == j) return 0;
  if (i > j) std::swap(i, j);
  const auto it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{i, j},
                                   [](const Pair& p, const std::pair<std::uint32_t, std::uint32_t>& k) {
                                     return p.first != k.first ? p.first < k.first
                                                               : p.second < k.second;
                                   });
  return (it != pairs.end() && it->first == i && it->second == j) ? it->windows : 0;
}

WindowCounts count_windows(const AnnotatedCorpus& corpus, View view, std::size_t window_size) {
  require_sequence_view(view, "count_windows");
  if (window_size < 1) throw Error("graphs.config", "window_size must be >= 1");
  WindowCounts counts;
  counts.node_count = corpus.vocab(view).size();
  counts.node_windows.assign(counts.node_count, 0);
  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  std::vector<std::uint32_t> window;
  for (const auto& doc : corpus.documents) {
    const auto& seq = AnnotatedCorpus::sequence(doc, view);
    const std::size_t len = seq.size();
    if (len == 0) continue;
    const std::size_t width = std::min(window_size, len);
    const std::size_t n_windows = len - width + 1;
    for (std::size_t start = 0; start < n_windows; ++start) {
      window.assign(seq.begin() + start, seq.begin() + start + width);
      std::sort(window.begin(), window.end());
      window.erase(std::unique(window.begin(), window.end()), window.end());
      ++counts.total_windows;
      for (std::size_t a = 0; a < window.size(); ++a) {
        ++counts.node_windows[window[a]];
        for (std::size_t b = a + 1; b < window.size(); ++b) ++pair_counts[pair_key(window[a], window[b])];
      }
    }
  }
  counts.pairs.reserve(pair_counts.size());
  for (const auto& [key, n] : pair_counts) {
    counts.pairs.push_back({static_cast<std::uint32_t>(key >> 32),
                            static_cast<std::uint32_t>(key & 0xffffffffu), n});
  }
  std::sort(counts.pairs.begin(), counts.pairs.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  return counts;
}

SparseMatrix pmi_adjacency(const WindowCounts& counts) {
  if (counts.total_windows == 0) {
    throw Error("graphs.no_windows", "PMI needs at least one sliding window");
  }
  const std::uint64_t total = counts.total_windows;
  std::vector<SparseEntry> entries;
  for (const auto& p : counts.pairs) {
    const std::uint64_t ni = counts.node_windows[p.first];
    const std::uint64_t nj = counts.node_windows[p.second];
    // PMI > 0 iff Omega_ij * Omega > Omega_i * Omega_j; decided in exact
    // integer arithmetic so the sparsity pattern has no rounding noise.
    const unsigned __int128 joint = static_cast<unsigned __int128>(p.windows) * total;
    const unsigned __int128 indep = static_cast<unsigned __int128>(ni) * nj;
    if (joint <= indep) continue;
    const double pmi = std::log((static_cast<double>(p.windows) * static_cast<double>(total)) /
                                (static_cast<double>(ni) * static_cast<double>(nj)));
    if (pmi <= 0.0) continue;
    entries.push_back({p.first, p.second, pmi});
    entries.push_back({p.second, p.first, pmi});
  }
  return SparseMatrix::from_triplets(counts.node_count, counts.node_count, std::move(entries));
}

SparseMatrix entity_adjacency(const EmbeddingTable& embeddings, const Vocabulary& entity_vocab) {
  const std::size_t n = entity_vocab.size();
  std::vector<const std::vector<double>*> vecs(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = embeddings.vectors.find(entity_vocab.token(i));
    if (it == embeddings.vectors.end()) {
      throw Error("graphs.missing_embedding", "entity '" + entity_vocab.token(i) + "' has no embedding");
    }
    vecs[i] = &it->second;
    double sq = 0.0;
    for (double v : it->second) sq += v * v;
    norms[i] = std::sqrt(sq);
    if (norms[i] == 0.0) {
      throw Error("graphs.zero_norm", "entity '" + entity_vocab.token(i) + "' has a zero-norm embedding");
    }
  }
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = *vecs[i];
      const auto& b = *vecs[j];
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d += a[k] * b[k];
      const double cosine = d / (norms[i] * norms[j]);
      if (cosine > 0.0) {
        entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), cosine});
        entries.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), cosine});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

std::string_view tfidf_variant_name(TfidfVariant v) {
  switch (v) {
    case TfidfVariant::kRaw:
      return "raw";
    case TfidfVariant::kLog:
      return "log";
    case TfidfVariant::kNormalized:
      return "normalized";
  }
  return "?";
}

std::optional<TfidfVariant> parse_tfidf_variant(std::string_view name) {
  if (name == "raw") return TfidfVariant::kRaw;
  if (name == "log") return TfidfVariant::kLog;
  if (name == "normalized") return TfidfVariant::kNormalized;
  return std::nullopt;
}

SparseMatrix tfidf_links(const AnnotatedCorpus& corpus, View view, TfidfVariant variant) {
  require_sequence_view(view, "tfidf_links");
  const std::size_t n_docs = corpus.size();
  const std::size_t n_nodes = corpus.vocab(view).size();
  std::vector<std::size_t> df(n_nodes, 0);
  std::vector<std::map<std::uint32_t, std::size_t>> tf(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) {
    for (std::uint32_t node : AnnotatedCorpus::sequence(corpus.documents[i], view)) ++tf[i][node];
    for (const auto& [node, count] : tf[i]) ++df[node];
  }
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const double len = static_cast<double>(AnnotatedCorpus::sequence(corpus.documents[i], view).size());
    for (const auto& [node, count] : tf[i]) {
      if (df[node] == n_docs) continue;
      const double idf = std::log(static_cast<double>(n_docs) / static_cast<double>(df[node]));
      double weight = static_cast<double>(count);
      if (variant == TfidfVariant::kLog) weight = 1.0 + std::log(weight);
      else if (variant == TfidfVariant::kNormalized) weight /= len;
      entries.push_back({static_cast<std::uint32_t>(i), node, weight * idf});
    }
  }
  return SparseMatrix::from_triplets(n_docs, n_nodes, std::move(entries));
}

SparseMatrix entity_links(const AnnotatedCorpus& corpus) {
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto ents = corpus.documents[i].entities;
    std::sort(ents.begin(), ents.end());
    ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    for (std::uint32_t e : ents) entries.push_back({static_cast<std::uint32_t>(i), e, 1.0});
  }
  return SparseMatrix::from_triplets(corpus.size(), corpus.entity_vocab.size(), std::move(entries));
}

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw Error("graphs.shape", "adjacency must be square");
  std::vector<SparseEntry> entries(adjacency.entries().begin(), adjacency.entries().end());
  for (std::size_t i = 0; i < n; ++i) {
    entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0});
  }
  const SparseMatrix with_loops =
      SparseMatrix::from_triplets(n, n, std::move(entries), SparseMatrix::Duplicates::kSum);
  std::vector<double> degree(n, 0.0);
  for (const auto& e : with_loops.entries()) degree[e.row] += e.value;
  std::vector<SparseEntry> out;
  out.reserve(with_loops.nnz());
  for (const auto& e : with_loops.entries()) {
    // sqrt(d_i * d_j) is symmetric in (i, j) bit for bit
    out.push_back({e.row, e.col, e.value / std::sqrt(degree[e.row] * degree[e.col])});
  }
  return SparseMatrix::from_triplets(n, n, std::move(out));
}

AnnotatedCorpus restrict_to_embedded_entities(const AnnotatedCorpus& corpus,
                                              const EmbeddingTable& entity_embeddings,
                                              std::vector<std::string>* dropped) {
  std::vector<std::string> missing;
  for (const auto& e : corpus.entity_vocab.tokens()) {
    if (!entity_embeddings.vectors.contains(e)) missing.push_back(e);
  }
  if (dropped != nullptr) *dropped = missing;
  if (missing.empty()) return corpus;
  return corpus.without_entities(missing);
}

GraphBundle build_graphs(const AnnotatedCorpus& corpus, const EmbeddingTable* word_embeddings,
                         const EmbeddingTable& entity_embeddings, const GraphConfig& config) {
  GraphBundle bundle;
  bundle.config = config;

  // word view
  {
    ViewGraph& g = bundle.graphs[0];
    g.view = View::kWord;
    const std::size_t dim = word_embeddings != nullptr ? word_embeddings->dim : config.word_dim;
    const auto& vocab = corpus.word_vocab;
    g.features = Matrix(vocab.size(), dim);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const std::vector<double>* pre = nullptr;
      if (word_embeddings != nullptr) {
        const auto it = word_embeddings->vectors.find(vocab.token(i));
        if (it != word_embeddings->vectors.end()) pre = &it->second;
      }
      auto row = g.features.row(i);
      if (pre != nullptr) {
        std::copy(pre->begin(), pre->end(), row.begin());
      } else {
        auto rng = make_stream(config.seed, i);
        for (double& v : row) v = uniform(rng, -0.01, 0.01);
      }
    }
    g.adjacency = pmi_adjacency(count_windows(corpus, View::kWord, config.window_size));
    g.norm_adj = normalize_adjacency(g.adjacency);
  }
  // tag view
  {
    ViewGraph& g = bundle.graphs[1];
    g.view = View::kTag;
    g.features = Matrix::identity(corpus.tag_vocab.size());
    g.adjacency = pmi_adjacency(count_windows(corpus, View::kTag, config.window_size));
    g.norm_adj = normalize_adjacency(g.adjacency);
  }
  // entity view
  {
    ViewGraph& g = bundle.graphs[2];
    g.view = View::kEntity;
    const auto& vocab = corpus.entity_vocab;
    g.adjacency = entity_adjacency(entity_embeddings, vocab);
    g.features = Matrix(vocab.size(), entity_embeddings.dim);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const auto& v = entity_embeddings.vectors.at(vocab.token(i));
      std::copy(v.begin(), v.end(), g.features.row(i).begin());
    }
    g.norm_adj = normalize_adjacency(g.adjacency);
  }

  bundle.links[0] = tfidf_links(corpus, View::kWord, config.tfidf_variant);
  bundle.links[1] = tfidf_links(corpus, View::kTag, config.tfidf_variant);
  bundle.links[2] = entity_links(corpus);

  for (const auto& d : corpus.documents) {
    bundle.doc_ids.push_back(d.id);
    bundle.labels.push_back(d.label);
    bundle.splits.push_back(d.split);
  }
  bundle.label_names = corpus.labels.tokens();
  bundle.vocabularies = {corpus.word_vocab.tokens(), corpus.tag_vocab.tokens(),
                         corpus.entity_vocab.tokens()};
  return bundle;
}

}  // namespace simstc
