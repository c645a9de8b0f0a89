#include "simstc/bundle.hpp"

#include <map>
#include <sstream>

#include "simstc/error.hpp"
#include "simstc/io.hpp"

namespace simstc {
namespace {

constexpr const char* kFormat = "simstc-graph-bundle";
constexpr int kVersion = 1;

std::string matrix_text(const SparseMatrix& m) {
  std::ostringstream ss;
  m.write(ss);
  return ss.str();
}

std::string lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (s.find('\n') != std::string::npos || s.find('\t') != std::string::npos) {
      throw Error("bundle.token", "token contains a tab or newline: '" + s + "'");
    }
    out += s;
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

Matrix dense_from(const SparseMatrix& m) { return m.to_dense(); }

SparseMatrix parse_matrix(const std::string& text, const std::string& name) {
  std::istringstream ss(text);
  try {
    return SparseMatrix::read(ss);
  } catch (const Error& e) {
    throw Error("bundle.format", name + ": " + e.what());
  }
}

std::string hash_of_files(const nlohmann::json& files, const std::string& config_hash) {
  std::string material = config_hash + "\n";
  for (const auto& [name, digest] : files.items()) {
    material += name + " " + digest.get<std::string>() + "\n";
  }
  return sha256_hex(material);
}

}  // namespace

nlohmann::json to_json(const GraphConfig& c) {
  return {{"window_size", c.window_size},
          {"tfidf_variant", tfidf_variant_name(c.tfidf_variant)},
          {"word_dim", c.word_dim},
          {"seed", c.seed}};
}

std::string write_bundle(const std::filesystem::path& dir, const GraphBundle& bundle,
                         const nlohmann::json& extra_manifest) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> contents;
  for (View v : kAllViews) {
    const std::string prefix(view_name(v));
    const ViewGraph& g = bundle.graph(v);
    contents[prefix + ".features.coo"] = matrix_text(SparseMatrix::from_dense(g.features));
    contents[prefix + ".adjacency.coo"] = matrix_text(g.adjacency);
    contents[prefix + ".norm_adj.coo"] = matrix_text(g.norm_adj);
    contents[prefix + ".links.coo"] = matrix_text(bundle.link(v));
    contents[prefix + ".vocab.txt"] = lines(bundle.vocabularies[static_cast<std::size_t>(v)]);
  }
  contents["labels.txt"] = lines(bundle.label_names);
  std::string docs;
  for (std::size_t i = 0; i < bundle.num_docs(); ++i) {
    if (bundle.doc_ids[i].find_first_of("\t\n") != std::string::npos) {
      throw Error("bundle.token", "document id contains a tab or newline: " + bundle.doc_ids[i]);
    }
    docs += bundle.doc_ids[i] + "\t" + std::to_string(bundle.labels[i]) + "\t" +
            std::string(split_name(bundle.splits[i])) + "\n";
  }
  contents["documents.tsv"] = docs;

  nlohmann::json files = nlohmann::json::object();
  for (const auto& [name, text] : contents) {
    write_file_atomic(dir / name, text);
    files[name] = sha256_hex(text);
  }
  nlohmann::json manifest = extra_manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["graph_config"] = to_json(bundle.config);
  const std::string config_hash = sha256_hex(manifest["graph_config"].dump());
  manifest["config_hash"] = config_hash;
  manifest["num_docs"] = bundle.num_docs();
  manifest["num_classes"] = bundle.num_classes();
  for (View v : kAllViews) {
    const ViewGraph& g = bundle.graph(v);
    manifest["views"][std::string(view_name(v))] = {{"nodes", g.node_count()},
                                                    {"feature_dim", g.features.cols},
                                                    {"adjacency_nnz", g.adjacency.nnz()},
                                                    {"links_nnz", bundle.link(v).nnz()}};
  }
  manifest["files"] = files;
  const std::string bundle_hash = hash_of_files(files, config_hash);
  manifest["bundle_hash"] = bundle_hash;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return bundle_hash;
}

StoredBundle read_bundle(const std::filesystem::path& dir) {
  StoredBundle out;
  try {
    out.manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bundle.format", (dir / "manifest.json").string() + ": " + e.what());
  }
  const auto& m = out.manifest;
  if (m.value("format", "") != kFormat || m.value("version", 0) != kVersion) {
    throw Error("bundle.format", dir.string() + " is not a version-1 graph bundle");
  }
  std::map<std::string, std::string> contents;
  for (const auto& [name, digest] : m.at("files").items()) {
    contents[name] = read_file(dir / name);
    if (sha256_hex(contents[name]) != digest.get<std::string>()) {
      throw Error("bundle.stale", (dir / name).string() + " does not match the manifest digest");
    }
  }
  const std::string config_hash = sha256_hex(m.at("graph_config").dump());
  if (config_hash != m.at("config_hash").get<std::string>() ||
      hash_of_files(m.at("files"), config_hash) != m.at("bundle_hash").get<std::string>()) {
    throw Error("bundle.stale", dir.string() + ": manifest hash mismatch");
  }
  out.bundle_hash = m.at("bundle_hash").get<std::string>();
  auto need = [&](const std::string& name) -> const std::string& {
    const auto it = contents.find(name);
    if (it == contents.end()) throw Error("bundle.format", "bundle lacks " + name);
    return it->second;
  };

  GraphBundle& b = out.bundle;
  const auto& gc = m.at("graph_config");
  b.config.window_size = gc.at("window_size").get<std::size_t>();
  b.config.tfidf_variant =
      parse_tfidf_variant(gc.at("tfidf_variant").get<std::string>()).value_or(TfidfVariant::kRaw);
  b.config.word_dim = gc.at("word_dim").get<std::size_t>();
  b.config.seed = gc.at("seed").get<std::uint64_t>();
  for (View v : kAllViews) {
    const std::string prefix(view_name(v));
    const auto i = static_cast<std::size_t>(v);
    ViewGraph& g = b.graphs[i];
    g.view = v;
    g.features = dense_from(parse_matrix(need(prefix + ".features.coo"), prefix + ".features.coo"));
    g.adjacency = parse_matrix(need(prefix + ".adjacency.coo"), prefix + ".adjacency.coo");
    g.norm_adj = parse_matrix(need(prefix + ".norm_adj.coo"), prefix + ".norm_adj.coo");
    b.links[i] = parse_matrix(need(prefix + ".links.coo"), prefix + ".links.coo");
    b.vocabularies[i] = split_lines(need(prefix + ".vocab.txt"));
  }
  b.label_names = split_lines(need("labels.txt"));
  for (const auto& line : split_lines(need("documents.tsv"))) {
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw Error("bundle.format", "documents.tsv: bad line '" + line + "'");
    }
    const auto split = parse_split(line.substr(t2 + 1));
    if (!split) throw Error("bundle.format", "documents.tsv: bad split in '" + line + "'");
    b.doc_ids.push_back(line.substr(0, t1));
    b.labels.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(t1 + 1, t2 - t1 - 1))));
    b.splits.push_back(*split);
  }
  return out;
}

}  // namespace simstc
