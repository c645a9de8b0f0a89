// Command-line front end: build-graphs, train, evaluate, ablate.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simstc/commands.hpp"
#include "simstc/error.hpp"

namespace {

using simstc::Error;

struct TrainFlags {
  double lr = 0.001;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  double min_improvement = 1e-6;
  std::uint64_t seed = 0;
  std::size_t hidden_dim = 128;
  std::size_t proj_dim = 128;
  double tau = 0.5;
  std::string pair_set = "all";
  bool count_ordered_pairs = false;
  std::string ce_reduction = "mean";
  std::string early_stop_metric = "val_ce";
  std::string final_activation = "linear";
  bool per_view_projection = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--max-epochs", f.max_epochs)->capture_default_str();
  cmd->add_option("--patience", f.patience, "Epochs without improvement before stopping")
      ->capture_default_str();
  cmd->add_option("--min-improvement", f.min_improvement)->capture_default_str();
  cmd->add_option("--seed", f.seed)->capture_default_str();
  cmd->add_option("--hidden-dim", f.hidden_dim)->capture_default_str();
  cmd->add_option("--proj-dim", f.proj_dim)->capture_default_str();
  cmd->add_option("--tau", f.tau, "Contrastive temperature")->capture_default_str();
  cmd->add_option("--pair-set", f.pair_set, "View pairs: all, none, or a list of wp,pe,we")
      ->capture_default_str();
  cmd->add_flag("--count-ordered-pairs", f.count_ordered_pairs,
                "Count each view pair in both orders");
  cmd->add_option("--ce-reduction", f.ce_reduction)
      ->check(CLI::IsMember({"mean", "sum"}))
      ->capture_default_str();
  cmd->add_option("--early-stop-metric", f.early_stop_metric)
      ->check(CLI::IsMember({"val_ce", "val_total"}))
      ->capture_default_str();
  cmd->add_option("--gcn-final-activation", f.final_activation)
      ->check(CLI::IsMember({"linear", "relu"}))
      ->capture_default_str();
  cmd->add_flag("--per-view-projection", f.per_view_projection,
                "One projection head per view instead of a shared head");
}

simstc::TrainConfig to_config(const TrainFlags& f) {
  simstc::TrainConfig c;
  c.learning_rate = f.lr;
  c.max_epochs = f.max_epochs;
  c.patience = f.patience;
  c.min_improvement = f.min_improvement;
  c.seed = f.seed;
  c.model.hidden_dim = f.hidden_dim;
  c.model.proj_dim = f.proj_dim;
  c.model.gcn_final_activation = *simstc::parse_final_activation(f.final_activation);
  c.model.per_view_projection = f.per_view_projection;
  c.contrastive.tau = f.tau;
  c.contrastive.pairs = simstc::PairSet::parse(f.pair_set);
  c.contrastive.count_ordered_pairs = f.count_ordered_pairs;
  c.ce_reduction = *simstc::parse_reduction(f.ce_reduction);
  c.early_stop_metric = *simstc::parse_early_stop_metric(f.early_stop_metric);
  c.validate();
  return c;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << nlohmann::json({{"error", code}, {"message", message}}).dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-text classification with multi-view graph contrastive learning"};
  app.set_version_flag("--version", simstc::commands::kToolVersion);
  app.require_subcommand(1);

  simstc::commands::BuildGraphsOptions build;
  std::string corpus, word_emb, entity_emb, stopwords, bundle_out;
  std::string tfidf_variant = "raw";
  auto* build_cmd = app.add_subcommand("build-graphs", "Build the word, tag and entity graphs");
  build_cmd->add_option("--corpus", corpus, "Annotated corpus (JSON lines)")->required();
  build_cmd->add_option("--word-emb", word_emb, "Word embedding file (random features if absent)");
  build_cmd->add_option("--entity-emb", entity_emb, "Entity embedding file");
  build_cmd->add_option("--out", bundle_out, "Output bundle directory")->required();
  build_cmd->add_option("--window-size", build.graph.window_size)->capture_default_str();
  build_cmd->add_option("--word-dim", build.graph.word_dim,
                        "Random word feature width when --word-emb is absent")
      ->capture_default_str();
  build_cmd->add_option("--seed", build.graph.seed)->capture_default_str();
  build_cmd->add_option("--tfidf-variant", tfidf_variant)
      ->check(CLI::IsMember({"raw", "log", "normalized"}))
      ->capture_default_str();
  build_cmd->add_option("--min-word-freq", build.corpus_options.min_word_freq)
      ->capture_default_str();
  build_cmd->add_option("--stopwords", stopwords, "Stopword list, one per line");

  TrainFlags train_flags;
  std::string train_bundle, train_out;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a graph bundle");
  train_cmd->add_option("--bundle", train_bundle)->required();
  train_cmd->add_option("--out", train_out)->required();
  add_train_flags(train_cmd, train_flags);

  std::string eval_checkpoint, eval_bundle, eval_split = "test";
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--bundle", eval_bundle)->required();
  eval_cmd->add_option("--split", eval_split)
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();

  TrainFlags ablate_flags;
  std::string ablate_bundle, ablate_out;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t threads = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train every view-pair subset over several seeds");
  ablate_cmd->add_option("--bundle", ablate_bundle)->required();
  ablate_cmd->add_option("--out", ablate_out)->required();
  ablate_cmd->add_option("--seeds", seeds, "Seeds to average over")->delimiter(',');
  ablate_cmd->add_option("--threads", threads, "Worker threads (default: SIMSTC_THREADS or 1)");
  add_train_flags(ablate_cmd, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("cli.usage", e.what());
    return 2;
  }

  try {
    if (*build_cmd) {
      build.corpus = corpus;
      build.out_dir = bundle_out;
      if (!word_emb.empty()) build.word_embeddings = word_emb;
      if (!entity_emb.empty()) build.entity_embeddings = entity_emb;
      if (!stopwords.empty()) build.corpus_options.stopword_path = stopwords;
      build.graph.tfidf_variant = *simstc::parse_tfidf_variant(tfidf_variant);
      simstc::commands::build_graphs(build, std::cerr);
    } else if (*train_cmd) {
      const auto result =
          simstc::commands::train({train_bundle, train_out, to_config(train_flags)}, std::cerr);
      std::cout << nlohmann::json({{"test_acc", result.value("test_acc", 0.0)},
                                   {"test_f1", result.value("test_f1", 0.0)},
                                   {"best_epoch", result["best_epoch"]}})
                       .dump()
                << std::endl;
    } else if (*eval_cmd) {
      std::cout << simstc::commands::evaluate(eval_checkpoint, eval_bundle,
                                              *simstc::parse_split(eval_split))
                       .dump(2)
                << std::endl;
    } else if (*ablate_cmd) {
      simstc::commands::AblateOptions opts{ablate_bundle, ablate_out, to_config(ablate_flags), seeds,
                                           threads == 0 ? simstc::configured_threads() : threads};
      simstc::commands::ablate(opts, std::cerr);
    }
  } catch (const Error& e) {
    report_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
