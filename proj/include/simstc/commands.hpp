#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "simstc/corpus.hpp"
#include "simstc/graphs.hpp"
#include "simstc/training.hpp"

// The pipeline stages behind the command-line tool. Each writes its outputs
// atomically plus a run_manifest.json describing the inputs (with digests),
// the configuration and the outputs.
namespace simstc::commands {

inline constexpr const char* kToolVersion = "0.1.0";

struct BuildGraphsOptions {
  std::filesystem::path corpus;
  std::optional<std::filesystem::path> word_embeddings;
  std::optional<std::filesystem::path> entity_embeddings;  // required
  std::filesystem::path out_dir;
  CorpusOptions corpus_options;
  GraphConfig graph;
};

struct BuildGraphsOutcome {
  std::string bundle_hash;
  std::vector<std::string> dropped_entities;
  double word_coverage = 0.0;  // 0 when no word embedding file
};

BuildGraphsOutcome build_graphs(const BuildGraphsOptions& options, std::ostream& log);

struct TrainOptions {
  std::filesystem::path bundle_dir;
  std::filesystem::path out_dir;
  TrainConfig config;
};

// Writes checkpoint.bin, metrics.jsonl (rewritten after every epoch),
// result.json and run_manifest.json. Returns result.json's content.
nlohmann::json train(const TrainOptions& options, std::ostream& log);

// Accuracy, macro-F1 and the per-class table as JSON.
nlohmann::json evaluate(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& bundle_dir, Split split);

struct AblateOptions {
  std::filesystem::path bundle_dir;
  std::filesystem::path out_dir;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  std::size_t threads = 1;
};

// Writes ablation.csv and ablation.json; returns the JSON.
nlohmann::json ablate(const AblateOptions& options, std::ostream& log);

// Grid rendering shared by ablate and the acceptance report.
std::string ablation_csv(const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

}  // namespace simstc::commands
