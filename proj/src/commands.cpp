#include "simstc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "simstc/bundle.hpp"
#include "simstc/error.hpp"
#include "simstc/io.hpp"
#include "simstc/model.hpp"

namespace simstc::commands {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::json scores_json(const EvalResult& r, const std::vector<std::string>& label_names) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    classes.push_back({{"class", c < label_names.size() ? label_names[c] : std::to_string(c)},
                       {"support", s.support},
                       {"predicted", s.predicted},
                       {"true_positive", s.true_positive},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1}});
  }
  return {{"total", r.total},
          {"correct", r.correct},
          {"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"per_class", classes}};
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const nlohmann::json& config, const nlohmann::json& inputs,
                    const std::vector<std::string>& outputs) {
  nlohmann::json m = {{"tool", "simstc"},
                      {"version", kToolVersion},
                      {"command", command},
                      {"config", config},
                      {"inputs", inputs},
                      {"outputs", outputs}};
  write_file_atomic(dir / "run_manifest.json", m.dump(2) + "\n");
}

std::string train_config_hash(const TrainConfig& config) { return sha256_hex(to_json(config).dump()); }

}  // namespace

BuildGraphsOutcome build_graphs(const BuildGraphsOptions& options, std::ostream& log) {
  if (!options.entity_embeddings) {
    throw Error("cli.missing_flag", "--entity-emb is required (entity embedding file)");
  }
  BuildGraphsOutcome outcome;
  AnnotatedCorpus corpus = load_corpus(options.corpus, options.corpus_options);
  const EmbeddingTable entity_emb = load_embeddings(*options.entity_embeddings, corpus.entity_vocab);
  corpus = restrict_to_embedded_entities(corpus, entity_emb, &outcome.dropped_entities);
  for (const auto& e : outcome.dropped_entities) {
    log << "warning: entity '" << e << "' has no embedding; dropped\n";
  }
  std::optional<EmbeddingTable> word_emb;
  if (options.word_embeddings) {
    word_emb = load_embeddings(*options.word_embeddings, corpus.word_vocab);
    outcome.word_coverage = word_emb->coverage;
    log << "word embedding coverage " << fmt_double(word_emb->coverage) << "\n";
  }
  const GraphBundle bundle =
      simstc::build_graphs(corpus, word_emb ? &*word_emb : nullptr, entity_emb, options.graph);

  nlohmann::json inputs = {{"corpus", {{"path", options.corpus.string()},
                                       {"sha256", sha256_file(options.corpus)}}},
                           {"entity_embeddings", {{"path", options.entity_embeddings->string()},
                                                  {"sha256", sha256_file(*options.entity_embeddings)}}}};
  if (options.word_embeddings) {
    inputs["word_embeddings"] = {{"path", options.word_embeddings->string()},
                                 {"sha256", sha256_file(*options.word_embeddings)}};
  }
  if (options.corpus_options.stopword_path) {
    inputs["stopwords"] = {{"path", options.corpus_options.stopword_path->string()},
                           {"sha256", sha256_file(*options.corpus_options.stopword_path)}};
  }
  nlohmann::json extra = {{"corpus_options", {{"min_word_freq", options.corpus_options.min_word_freq}}},
                          {"dropped_entities", outcome.dropped_entities}};
  outcome.bundle_hash = write_bundle(options.out_dir, bundle, extra);

  nlohmann::json config = to_json(options.graph);
  config["min_word_freq"] = options.corpus_options.min_word_freq;
  write_manifest(options.out_dir, "build-graphs", config, inputs, {"manifest.json"});
  log << "bundle " << outcome.bundle_hash << ": " << bundle.num_docs() << " documents, "
      << bundle.graph(View::kWord).node_count() << " words, "
      << bundle.graph(View::kTag).node_count() << " tags, "
      << bundle.graph(View::kEntity).node_count() << " entities, " << bundle.num_classes()
      << " classes\n";
  return outcome;
}

nlohmann::json train(const TrainOptions& options, std::ostream& log) {
  const auto wall_start = std::chrono::steady_clock::now();
  const StoredBundle stored = read_bundle(options.bundle_dir);
  std::filesystem::create_directories(options.out_dir);
  const std::string config_hash = train_config_hash(options.config);

  std::string metrics;
  const auto metrics_path = options.out_dir / "metrics.jsonl";
  const TrainResult result = simstc::train(stored.bundle, options.config, [&](const EpochRecord& r) {
    metrics += to_json(r).dump() + "\n";
    write_file_atomic(metrics_path, metrics);
    log << "epoch " << r.epoch << " l_ce=" << fmt_double(r.train.l_ce)
        << " l_cl=" << fmt_double(r.train.l_cl) << " mi_bound=" << fmt_double(r.train.mi_lower_bound)
        << " val_ce=" << fmt_double(r.val_ce) << " val_acc=" << fmt_double(r.val_accuracy) << "\n";
  });

  CheckpointMeta meta;
  meta.seed = options.config.seed;
  meta.bundle_hash = stored.bundle_hash;
  meta.config_hash = config_hash;
  meta.extra_json = nlohmann::json({{"train_config", to_json(options.config)},
                                    {"best_epoch", result.best_epoch}})
                        .dump();
  save_checkpoint(options.out_dir / "checkpoint.bin", result.model, meta);

  const std::vector<std::string>& labels = stored.bundle.label_names;
  nlohmann::json out = {
      {"config", to_json(options.config)},
      {"config_hash", config_hash},
      {"bundle_hash", stored.bundle_hash},
      {"best_epoch", result.best_epoch},
      {"best_val_loss", result.best_val_loss},
      {"epochs_run", result.epochs.size()},
      {"early_stopped", result.early_stopped},
      {"parameter_count", result.model.parameter_count()},
      {"train", scores_json(evaluate(result.model, stored.bundle, Split::kTrain), labels)},
      {"val", scores_json(evaluate(result.model, stored.bundle, Split::kVal), labels)},
  };
  if (std::count(stored.bundle.splits.begin(), stored.bundle.splits.end(), Split::kTest) == 0) {
    out["test"] = nullptr;
  } else {
    const EvalResult test = evaluate(result.model, stored.bundle, Split::kTest);
    out["test"] = scores_json(test, labels);
    out["test_acc"] = test.accuracy;
    out["test_f1"] = test.macro_f1;
  }
  out["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  write_file_atomic(options.out_dir / "result.json", out.dump(2) + "\n");

  nlohmann::json inputs = {{"bundle", {{"path", options.bundle_dir.string()},
                                       {"bundle_hash", stored.bundle_hash},
                                       {"manifest_sha256", sha256_file(options.bundle_dir / "manifest.json")}}}};
  write_manifest(options.out_dir, "train", to_json(options.config), inputs,
                 {"checkpoint.bin", "metrics.jsonl", "result.json"});
  return out;
}

nlohmann::json evaluate(const std::filesystem::path& checkpoint,
                        const std::filesystem::path& bundle_dir, Split split) {
  const StoredBundle stored = read_bundle(bundle_dir);
  CheckpointMeta meta;
  const ModelParams model = load_checkpoint(checkpoint, &meta);
  if (meta.bundle_hash != stored.bundle_hash) {
    throw Error("checkpoint.incompatible", "checkpoint was trained on bundle " + meta.bundle_hash +
                                               ", not " + stored.bundle_hash);
  }
  nlohmann::json out = scores_json(evaluate(model, stored.bundle, split), stored.bundle.label_names);
  out["split"] = split_name(split);
  out["bundle_hash"] = stored.bundle_hash;
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string csv = "word_pos,pos_entity,word_entity";
  if (!rows.empty()) {
    for (const auto& run : rows[0].runs) {
      csv += ",acc_seed" + std::to_string(run.seed) + ",f1_seed" + std::to_string(run.seed);
    }
  }
  csv += ",acc_mean,acc_std,f1_mean,f1_std\n";
  for (const auto& row : rows) {
    for (ViewPair p : kAllPairs) {
      csv += row.pairs.contains(p) ? "x" : "-";
      csv += p == ViewPair::kWordEntity ? "" : ",";
    }
    for (const auto& run : row.runs) csv += "," + fmt_double(run.accuracy) + "," + fmt_double(run.macro_f1);
    csv += "," + fmt_double(row.mean_accuracy) + "," + fmt_double(row.std_accuracy) + "," +
           fmt_double(row.mean_macro_f1) + "," + fmt_double(row.std_macro_f1) + "\n";
  }
  return csv;
}

nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : row.runs) {
      runs.push_back({{"seed", run.seed},
                      {"accuracy", run.accuracy},
                      {"macro_f1", run.macro_f1},
                      {"best_epoch", run.best_epoch}});
    }
    out.push_back({{"word_pos", row.pairs.contains(ViewPair::kWordTag)},
                   {"pos_entity", row.pairs.contains(ViewPair::kTagEntity)},
                   {"word_entity", row.pairs.contains(ViewPair::kWordEntity)},
                   {"pair_set", row.pairs.to_string()},
                   {"runs", runs},
                   {"acc_mean", row.mean_accuracy},
                   {"acc_std", row.std_accuracy},
                   {"f1_mean", row.mean_macro_f1},
                   {"f1_std", row.std_macro_f1}});
  }
  return out;
}

nlohmann::json ablate(const AblateOptions& options, std::ostream& log) {
  const StoredBundle stored = read_bundle(options.bundle_dir);
  std::filesystem::create_directories(options.out_dir);
  log << "ablation: 8 pair subsets x " << options.seeds.size() << " seed(s) on "
      << options.threads << " thread(s)\n";
  const auto rows = run_ablation(stored.bundle, options.config, options.seeds, options.threads);
  const std::string csv = ablation_csv(rows);
  nlohmann::json out = {{"config", to_json(options.config)},
                        {"config_hash", train_config_hash(options.config)},
                        {"bundle_hash", stored.bundle_hash},
                        {"seeds", options.seeds},
                        {"rows", ablation_json(rows)}};
  write_file_atomic(options.out_dir / "ablation.csv", csv);
  write_file_atomic(options.out_dir / "ablation.json", out.dump(2) + "\n");
  nlohmann::json config = to_json(options.config);
  config["seeds"] = options.seeds;
  write_manifest(options.out_dir, "ablate", config,
                 {{"bundle", {{"path", options.bundle_dir.string()}, {"bundle_hash", stored.bundle_hash}}}},
                 {"ablation.csv", "ablation.json"});
  log << csv;
  return out;
}

}  // namespace simstc::commands
