#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace simstc {

enum class Split : std::uint8_t { kTrain, kVal, kTest };
enum class View : std::uint8_t { kWord, kTag, kEntity };

inline constexpr std::array<View, 3> kAllViews{View::kWord, View::kTag, View::kEntity};

std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);
std::string_view view_name(View view);

// Dense token <-> index map. Indices follow lexicographic token order so two
// loads of the same data always agree.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Sorts and deduplicates.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::uint32_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct Document {
  std::string id;
  std::vector<std::uint32_t> words;     // indices into word_vocab
  std::vector<std::uint32_t> tags;      // aligned with words
  std::vector<std::uint32_t> entities;  // indices into entity_vocab, may repeat
  std::uint32_t label = 0;
  Split split = Split::kTrain;

  friend bool operator==(const Document&, const Document&) = default;
};

struct AnnotatedCorpus {
  std::vector<Document> documents;
  Vocabulary word_vocab;
  Vocabulary tag_vocab;
  Vocabulary entity_vocab;
  Vocabulary labels;  // label string for each class index

  std::size_t size() const { return documents.size(); }
  std::size_t num_classes() const { return labels.size(); }
  const Vocabulary& vocab(View view) const;
  static const std::vector<std::uint32_t>& sequence(const Document& doc, View view);
  // Document counts indexed by Split.
  std::array<std::size_t, 3> split_counts() const;
  std::vector<std::uint32_t> split_indices(Split split) const;

  // Removes the listed entities from the vocabulary and from every document,
  // re-indexing the rest. Throws if a document is left empty in all views.
  AnnotatedCorpus without_entities(const std::vector<std::string>& drop) const;
};

struct CorpusOptions {
  std::size_t min_word_freq = 5;
  std::optional<std::filesystem::path> stopword_path;
};

// JSON-Lines corpus: one object per line with id, tokens, tags, entities,
// label and split. Blank lines are ignored.
AnnotatedCorpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});
AnnotatedCorpus parse_corpus(std::istream& in, const CorpusOptions& options,
                             const std::vector<std::string>& stopwords = {},
                             std::string_view source = "<stream>");

struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> vectors;
  double coverage = 0.0;  // fraction of the requested vocabulary found
};

// Whitespace-separated "token v1 ... vd" lines. Tokens outside the vocabulary
// are dimension-checked and skipped. A leading "count dim" header line (the
// word2vec text convention) is tolerated.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab);
EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab,
                                std::string_view source = "<stream>");

}  // namespace simstc
