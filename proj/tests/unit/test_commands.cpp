#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "simstc/bundle.hpp"
#include "simstc/commands.hpp"
#include "simstc/error.hpp"

namespace simstc {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void expect_same_graph(const GraphBundle& a, const GraphBundle& b) {
  EXPECT_EQ(a.doc_ids, b.doc_ids);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.splits, b.splits);
  EXPECT_EQ(a.label_names, b.label_names);
  EXPECT_EQ(a.vocabularies, b.vocabularies);
  for (View v : kAllViews) {
    EXPECT_EQ(a.graph(v).features.data, b.graph(v).features.data);
    EXPECT_TRUE(std::ranges::equal(a.graph(v).adjacency.entries(), b.graph(v).adjacency.entries()));
    EXPECT_TRUE(std::ranges::equal(a.graph(v).norm_adj.entries(), b.graph(v).norm_adj.entries()));
    EXPECT_TRUE(std::ranges::equal(a.link(v).entries(), b.link(v).entries()));
  }
}

TEST(Bundle, RoundTripIsExact) {
  TempDir dir;
  const auto bundle = testing::six_doc_bundle();
  const auto hash = write_bundle(dir.path(), bundle);
  const auto stored = read_bundle(dir.path());
  EXPECT_EQ(stored.bundle_hash, hash);
  expect_same_graph(bundle, stored.bundle);
  EXPECT_EQ(stored.bundle.config.window_size, 3u);
}

TEST(Bundle, RewriteIsByteIdentical) {
  TempDir a, b;
  const auto bundle = testing::six_doc_bundle();
  EXPECT_EQ(write_bundle(a.path(), bundle), write_bundle(b.path(), bundle));
  for (const auto& entry : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename().string())) << entry.path();
  }
}

TEST(Bundle, EditedFileIsStale) {
  TempDir dir;
  write_bundle(dir.path(), testing::six_doc_bundle());
  {
    std::ofstream out(dir / "labels.txt", std::ios::app);
    out << "extra\n";
  }
  try {
    read_bundle(dir.path());
    FAIL() << "expected bundle.stale";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "bundle.stale");
  }
}

TEST(Bundle, MissingDirectory) {
  TempDir dir;
  EXPECT_THROW(read_bundle(dir / "nope"), Error);
}

struct Pipeline {
  TempDir dir;
  toy::ToyPaths paths;
  fs::path bundle_dir;

  Pipeline() {
    toy::ToyCorpusOptions o;
    o.documents = 80;
    o.word_dim = 12;
    paths = toy::write_toy_corpus(dir.path(), toy::make_toy_corpus(o));
    bundle_dir = dir / "bundle";
  }

  commands::BuildGraphsOptions build_options() const {
    commands::BuildGraphsOptions b;
    b.corpus = paths.corpus;
    b.word_embeddings = paths.word_embeddings;
    b.entity_embeddings = paths.entity_embeddings;
    b.out_dir = bundle_dir;
    b.corpus_options.min_word_freq = 2;
    return b;
  }
};

TrainConfig quick_config() {
  TrainConfig c;
  c.model.hidden_dim = 16;
  c.model.proj_dim = 16;
  c.learning_rate = 0.01;
  c.max_epochs = 15;
  return c;
}

TEST(Commands, BuildGraphsWritesBundleAndManifest) {
  Pipeline p;
  std::ostringstream log;
  const auto outcome = commands::build_graphs(p.build_options(), log);
  EXPECT_EQ(outcome.bundle_hash.size(), 64u);
  EXPECT_GT(outcome.word_coverage, 0.0);
  EXPECT_EQ(read_bundle(p.bundle_dir).bundle_hash, outcome.bundle_hash);
  const auto manifest = nlohmann::json::parse(slurp(p.bundle_dir / "run_manifest.json"));
  EXPECT_EQ(manifest.at("command"), "build-graphs");
  EXPECT_EQ(manifest.at("version"), commands::kToolVersion);
  EXPECT_FALSE(manifest.at("inputs").empty());
}

TEST(Commands, EntityEmbeddingsRequired) {
  Pipeline p;
  auto options = p.build_options();
  options.entity_embeddings.reset();
  std::ostringstream log;
  try {
    commands::build_graphs(options, log);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("--entity-emb"), std::string::npos);
  }
}

TEST(Commands, TrainEvaluateAndReproduce) {
  Pipeline p;
  std::ostringstream log;
  commands::build_graphs(p.build_options(), log);
  const auto config = quick_config();
  const auto first = commands::train({p.bundle_dir, p.dir / "run1", config}, log);
  const auto second = commands::train({p.bundle_dir, p.dir / "run2", config}, log);

  auto strip = [](nlohmann::json j) {
    j.erase("wall_seconds");
    return j;
  };
  EXPECT_EQ(strip(first), strip(second));
  EXPECT_EQ(slurp(p.dir / "run1" / "checkpoint.bin"), slurp(p.dir / "run2" / "checkpoint.bin"));

  std::ifstream metrics(p.dir / "run1" / "metrics.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(metrics, line);) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch").get<std::size_t>(), ++lines);
  }
  EXPECT_EQ(lines, first.at("epochs_run").get<std::size_t>());

  const auto eval = commands::evaluate(p.dir / "run1" / "checkpoint.bin", p.bundle_dir, Split::kTest);
  EXPECT_EQ(eval.at("accuracy"), first.at("test_acc"));
  EXPECT_EQ(eval.at("macro_f1"), first.at("test_f1"));
  EXPECT_EQ(eval.at("split"), "test");
}

TEST(Commands, CheckpointFromAnotherBundleIsRejected) {
  Pipeline p;
  std::ostringstream log;
  commands::build_graphs(p.build_options(), log);
  commands::train({p.bundle_dir, p.dir / "run", quick_config()}, log);

  auto other = p.build_options();
  other.out_dir = p.dir / "other";
  other.graph.window_size = 3;
  commands::build_graphs(other, log);
  try {
    commands::evaluate(p.dir / "run" / "checkpoint.bin", other.out_dir, Split::kTest);
    FAIL() << "expected checkpoint.incompatible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "checkpoint.incompatible");
  }
}

TEST(Commands, AblateWritesEightRows) {
  Pipeline p;
  std::ostringstream log;
  commands::build_graphs(p.build_options(), log);
  auto config = quick_config();
  config.max_epochs = 3;
  commands::AblateOptions options{p.bundle_dir, p.dir / "ablate", config, {0}, 1};
  const auto j = commands::ablate(options, log);
  EXPECT_EQ(j.at("rows").size(), 8u);
  std::ifstream csv(p.dir / "ablate" / "ablation.csv");
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0], "word_pos,pos_entity,word_entity,acc_seed0,f1_seed0,acc_mean,acc_std,f1_mean,f1_std");
  EXPECT_EQ(lines[1].substr(0, 6), "-,-,-,");
  EXPECT_EQ(lines[8].substr(0, 6), "x,x,x,");
}

#ifdef SIMSTC_CLI_PATH
struct CliResult {
  int status;
  std::string out;
  std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(SIMSTC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

TEST(Cli, MissingEntityEmbeddingNamesTheFlag) {
  Pipeline p;
  const auto r = run_cli(p.dir, "build-graphs --corpus " + p.paths.corpus.string() + " --out " +
                                    p.bundle_dir.string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("--entity-emb"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSplitIsUsageError) {
  TempDir dir;
  const auto r = run_cli(dir, "evaluate --checkpoint x --bundle y --split dev");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("cli.usage"), std::string::npos) << r.err;
}

TEST(Cli, EndToEndWithEmptyPairSet) {
  Pipeline p;
  auto r = run_cli(p.dir, "build-graphs --corpus " + p.paths.corpus.string() + " --entity-emb " +
                              p.paths.entity_embeddings.string() + " --min-word-freq 2 --out " +
                              p.bundle_dir.string());
  ASSERT_EQ(r.status, 0) << r.err;
  r = run_cli(p.dir, "train --bundle " + p.bundle_dir.string() + " --out " + (p.dir / "run").string() +
                         " --pair-set '' --hidden-dim 8 --proj-dim 8 --max-epochs 5 --lr 0.01");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_TRUE(summary.contains("test_acc"));
  const auto result = nlohmann::json::parse(slurp(p.dir / "run" / "result.json"));
  EXPECT_EQ(result.at("config").at("pair_set"), "");
  std::ifstream metrics(p.dir / "run" / "metrics.jsonl");
  for (std::string line; std::getline(metrics, line);) {
    EXPECT_EQ(nlohmann::json::parse(line).at("l_cl").get<double>(), 0.0);
  }
  r = run_cli(p.dir, "evaluate --checkpoint " + (p.dir / "run" / "checkpoint.bin").string() + " --bundle " +
                         p.bundle_dir.string() + " --split val");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("split"), "val");
}
#endif

}  // namespace
}  // namespace simstc
