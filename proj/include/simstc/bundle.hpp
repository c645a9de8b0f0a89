#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "simstc/graphs.hpp"

namespace simstc {

// On-disk graph bundle:
//
//   manifest.json            format, config, dimensions, per-file SHA-256
//   <view>.features.coo      |V| x d node features
//   <view>.adjacency.coo     A
//   <view>.norm_adj.coo      D^-1/2 (A + I) D^-1/2
//   <view>.links.coo         N x |V| text-node links
//   <view>.vocab.txt         one token per line, index order
//   labels.txt               one label per line, class-index order
//   documents.tsv            id <TAB> label index <TAB> split, corpus order
//
// for <view> in word, tag, entity. Matrices use SparseMatrix::write.
struct StoredBundle {
  GraphBundle bundle;
  nlohmann::json manifest;
  std::string bundle_hash;
};

// `extra_manifest` is merged into the manifest (input digests, options).
// Returns the bundle hash.
std::string write_bundle(const std::filesystem::path& dir, const GraphBundle& bundle,
                         const nlohmann::json& extra_manifest = nlohmann::json::object());

// Verifies every file digest against the manifest; a mismatch raises
// "bundle.stale".
StoredBundle read_bundle(const std::filesystem::path& dir);

nlohmann::json to_json(const GraphConfig& config);

}  // namespace simstc
