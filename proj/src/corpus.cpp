#include "simstc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "simstc/error.hpp"

namespace simstc {
namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> string_array(const nlohmann::json& obj, const char* key,
                                      std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) {
    throw Error("corpus.malformed", std::string(where) + ": missing array field '" + key + "'");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error("corpus.malformed", std::string(where) + ": non-string in '" + key + "'");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const nlohmann::json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error("corpus.malformed", std::string(where) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

struct RawDocument {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<std::string> entities;
  std::string label;
  Split split;
};

void reject_empty(const std::vector<Document>& docs) {
  std::string ids;
  std::size_t count = 0;
  for (const auto& d : docs) {
    if (d.words.empty() && d.entities.empty()) {
      if (count++ > 0) ids += ",";
      ids += d.id;
    }
  }
  if (count > 0) {
    throw Error("corpus.empty_document",
                std::to_string(count) + " document(s) empty in all views after filtering: " + ids);
  }
}

std::vector<std::string> read_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("corpus.io", "cannot read stopword file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) words.push_back(lowercase(w));
  }
  return words;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view view_name(View view) {
  switch (view) {
    case View::kWord:
      return "word";
    case View::kTag:
      return "tag";
    case View::kEntity:
      return "entity";
  }
  return "?";
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<std::uint32_t>(i));
  }
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Vocabulary& AnnotatedCorpus::vocab(View view) const {
  switch (view) {
    case View::kWord:
      return word_vocab;
    case View::kTag:
      return tag_vocab;
    case View::kEntity:
      return entity_vocab;
  }
  return word_vocab;
}

const std::vector<std::uint32_t>& AnnotatedCorpus::sequence(const Document& doc, View view) {
  switch (view) {
    case View::kWord:
      return doc.words;
    case View::kTag:
      return doc.tags;
    case View::kEntity:
      return doc.entities;
  }
  return doc.words;
}

std::array<std::size_t, 3> AnnotatedCorpus::split_counts() const {
  std::array<std::size_t, 3> counts{};
  for (const auto& d : documents) ++counts[static_cast<std::size_t>(d.split)];
  return counts;
}

std::vector<std::uint32_t> AnnotatedCorpus::split_indices(Split split) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].split == split) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

AnnotatedCorpus AnnotatedCorpus::without_entities(const std::vector<std::string>& drop) const {
  const std::unordered_set<std::string> dropped(drop.begin(), drop.end());
  std::vector<std::string> keep;
  for (const auto& t : entity_vocab.tokens()) {
    if (!dropped.contains(t)) keep.push_back(t);
  }
  AnnotatedCorpus out = *this;
  out.entity_vocab = Vocabulary(std::move(keep));
  for (auto& doc : out.documents) {
    std::vector<std::uint32_t> remapped;
    for (std::uint32_t e : doc.entities) {
      if (auto idx = out.entity_vocab.find(entity_vocab.token(e))) remapped.push_back(*idx);
    }
    doc.entities = std::move(remapped);
  }
  reject_empty(out.documents);
  return out;
}

AnnotatedCorpus parse_corpus(std::istream& in, const CorpusOptions& options,
                             const std::vector<std::string>& stopwords, std::string_view source) {
  if (options.min_word_freq < 1) {
    throw Error("corpus.config", "min_word_freq must be >= 1");
  }
  std::vector<RawDocument> raw;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("corpus.malformed", where + ": malformed JSON line (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error("corpus.malformed", where + ": line is not a JSON object");

    RawDocument doc;
    doc.id = string_field(obj, "id", where);
    doc.tokens = string_array(obj, "tokens", where);
    doc.tags = string_array(obj, "tags", where);
    doc.entities = string_array(obj, "entities", where);
    doc.label = string_field(obj, "label", where);
    const std::string split = string_field(obj, "split", where);
    const auto parsed = parse_split(split);
    if (!parsed) throw Error("corpus.split", where + ": unknown split '" + split + "'");
    doc.split = *parsed;
    if (doc.tags.size() != doc.tokens.size()) {
      throw Error("corpus.tag_mismatch", where + ": " + std::to_string(doc.tokens.size()) +
                                             " tokens but " + std::to_string(doc.tags.size()) +
                                             " tags");
    }
    if (!seen_ids.insert(doc.id).second) {
      throw Error("corpus.duplicate_id", where + ": duplicate document id '" + doc.id + "'");
    }
    for (auto& t : doc.tokens) t = lowercase(std::move(t));
    raw.push_back(std::move(doc));
  }
  if (raw.empty()) throw Error("corpus.empty", std::string(source) + ": no documents");

  const std::unordered_set<std::string> stop(stopwords.begin(), stopwords.end());
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& d : raw) {
    for (const auto& t : d.tokens) ++freq[t];
  }
  auto keep_word = [&](const std::string& t) {
    return !stop.contains(t) && freq[t] >= options.min_word_freq;
  };

  // Filter words and their tags in lockstep.
  std::set<std::string> words, tags, entities, labels;
  for (auto& d : raw) {
    std::vector<std::string> kept_tokens, kept_tags;
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (keep_word(d.tokens[i])) {
        kept_tokens.push_back(std::move(d.tokens[i]));
        kept_tags.push_back(std::move(d.tags[i]));
      }
    }
    d.tokens = std::move(kept_tokens);
    d.tags = std::move(kept_tags);
    words.insert(d.tokens.begin(), d.tokens.end());
    tags.insert(d.tags.begin(), d.tags.end());
    entities.insert(d.entities.begin(), d.entities.end());
    labels.insert(d.label);
  }

  AnnotatedCorpus corpus;
  corpus.word_vocab = Vocabulary({words.begin(), words.end()});
  corpus.tag_vocab = Vocabulary({tags.begin(), tags.end()});
  corpus.entity_vocab = Vocabulary({entities.begin(), entities.end()});
  corpus.labels = Vocabulary({labels.begin(), labels.end()});
  corpus.documents.reserve(raw.size());
  for (const auto& r : raw) {
    Document d;
    d.id = r.id;
    d.split = r.split;
    d.label = *corpus.labels.find(r.label);
    for (const auto& t : r.tokens) d.words.push_back(*corpus.word_vocab.find(t));
    for (const auto& t : r.tags) d.tags.push_back(*corpus.tag_vocab.find(t));
    for (const auto& e : r.entities) d.entities.push_back(*corpus.entity_vocab.find(e));
    corpus.documents.push_back(std::move(d));
  }
  reject_empty(corpus.documents);
  return corpus;
}

AnnotatedCorpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("corpus.io", "cannot read corpus file " + path.string());
  std::vector<std::string> stopwords;
  if (options.stopword_path) stopwords = read_stopwords(*options.stopword_path);
  return parse_corpus(in, options, stopwords, path.string());
}

EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocab, std::string_view source) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_dim = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw Error("embeddings.malformed", std::string(source) + ":" + std::to_string(line_no) +
                                                ": bad value '" + field + "'");
      }
      values.push_back(v);
    }
    if (line_no == 1 && values.size() == 1 &&
        std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); }) &&
        values[0] == std::floor(values[0])) {
      continue;  // "count dim" header
    }
    if (values.empty()) {
      throw Error("embeddings.malformed",
                  std::string(source) + ":" + std::to_string(line_no) + ": no vector values");
    }
    if (!have_dim) {
      table.dim = values.size();
      have_dim = true;
    } else if (values.size() != table.dim) {
      throw Error("embeddings.dimension", std::string(source) + ":" + std::to_string(line_no) +
                                              ": expected " + std::to_string(table.dim) +
                                              " values, got " + std::to_string(values.size()));
    }
    if (vocab.contains(token)) table.vectors.insert_or_assign(token, std::move(values));
  }
  if (vocab.empty()) {
    table.coverage = 1.0;
    return table;
  }
  table.coverage = static_cast<double>(table.vectors.size()) / static_cast<double>(vocab.size());
  if (table.vectors.empty()) {
    throw Error("embeddings.coverage",
                std::string(source) + ": no vocabulary token has an embedding");
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error("embeddings.io", "cannot read embedding file " + path.string());
  return parse_embeddings(in, vocab, path.string());
}

}  // namespace simstc
