#include "simstc/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <limits>
#include <thread>

#include "simstc/error.hpp"
#include "simstc/kernels.hpp"

namespace simstc {
namespace {

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

std::vector<std::uint32_t> rows_of(const GraphBundle& bundle, Split split) {
  std::vector<std::uint32_t> rows;
  for (std::size_t i = 0; i < bundle.splits.size(); ++i) {
    if (bundle.splits[i] == split) rows.push_back(static_cast<std::uint32_t>(i));
  }
  return rows;
}

EvalResult score_rows(const Matrix& log_probs, const GraphBundle& bundle,
                      std::span<const std::uint32_t> rows) {
  const auto predicted_all = predict(log_probs);
  std::vector<std::uint32_t> predicted, truth;
  for (std::uint32_t r : rows) {
    predicted.push_back(predicted_all[r]);
    truth.push_back(bundle.labels[r]);
  }
  return score_predictions(predicted, truth, bundle.num_classes());
}

}  // namespace

std::string_view early_stop_metric_name(EarlyStopMetric m) {
  return m == EarlyStopMetric::kValTotal ? "val_total" : "val_ce";
}

std::optional<EarlyStopMetric> parse_early_stop_metric(std::string_view name) {
  if (name == "val_ce") return EarlyStopMetric::kValCe;
  if (name == "val_total") return EarlyStopMetric::kValTotal;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("config.learning_rate", "learning rate must be finite and positive");
  }
  if (patience < 1) throw Error("config.patience", "patience must be >= 1");
  if (max_epochs < 1) throw Error("config.max_epochs", "max_epochs must be >= 1");
  if (!(contrastive.tau > 0.0)) throw Error("config.tau", "tau must be positive");
  if (model.hidden_dim < 1 || model.proj_dim < 1) {
    throw Error("config.dims", "hidden_dim and proj_dim must be positive");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"learning_rate", c.learning_rate},
      {"max_epochs", c.max_epochs},
      {"patience", c.patience},
      {"min_improvement", c.min_improvement},
      {"seed", c.seed},
      {"hidden_dim", c.model.hidden_dim},
      {"proj_dim", c.model.proj_dim},
      {"gcn_final_activation", final_activation_name(c.model.gcn_final_activation)},
      {"per_view_projection", c.model.per_view_projection},
      {"tau", c.contrastive.tau},
      {"pair_set", c.contrastive.pairs.to_string()},
      {"count_ordered_pairs", c.contrastive.count_ordered_pairs},
      {"ce_reduction", reduction_name(c.ce_reduction)},
      {"early_stop_metric", early_stop_metric_name(c.early_stop_metric)},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.min_improvement = j.at("min_improvement").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.model.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.model.proj_dim = j.at("proj_dim").get<std::size_t>();
  c.model.gcn_final_activation =
      parse_final_activation(j.at("gcn_final_activation").get<std::string>())
          .value_or(FinalActivation::kLinear);
  c.model.per_view_projection = j.at("per_view_projection").get<bool>();
  c.contrastive.tau = j.at("tau").get<double>();
  c.contrastive.pairs = PairSet::parse(j.at("pair_set").get<std::string>());
  c.contrastive.count_ordered_pairs = j.at("count_ordered_pairs").get<bool>();
  c.ce_reduction = parse_reduction(j.at("ce_reduction").get<std::string>()).value_or(Reduction::kMean);
  c.early_stop_metric = parse_early_stop_metric(j.at("early_stop_metric").get<std::string>())
                            .value_or(EarlyStopMetric::kValCe);
  return c;
}

void adam_step(std::span<const NamedParameter> params, AdamState& state, double learning_rate) {
  for (const auto& p : params) {
    if (!p.tensor.grad().all_finite()) {
      throw Error("training.non_finite_gradient", "non-finite gradient in " + p.name);
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.rows(), p.tensor.cols());
      state.v.emplace_back(p.tensor.rows(), p.tensor.cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw Error("training.optimizer", "optimizer state does not match the parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double correction2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor param = params[k].tensor;
    const Matrix& g = param.grad();
    Matrix& theta = param.mutable_value();
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m.data[i] = AdamState::kBeta1 * m.data[i] + (1.0 - AdamState::kBeta1) * g.data[i];
      v.data[i] = AdamState::kBeta2 * v.data[i] + (1.0 - AdamState::kBeta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / correction1;
      const double v_hat = v.data[i] / correction2;
      theta.data[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
    }
  }
}

EvalResult score_predictions(std::span<const std::uint32_t> predicted,
                             std::span<const std::uint32_t> truth, std::size_t num_classes) {
  if (predicted.size() != truth.size()) {
    throw Error("metrics.shape", "prediction and label counts differ");
  }
  if (truth.empty()) throw Error("metrics.empty_split", "cannot score an empty document set");
  EvalResult r;
  r.total = truth.size();
  r.per_class.resize(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw Error("metrics.label", "class index out of range");
    }
    ++r.per_class[truth[i]].support;
    ++r.per_class[predicted[i]].predicted;
    if (truth[i] == predicted[i]) {
      ++r.correct;
      ++r.per_class[truth[i]].true_positive;
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  double f1_sum = 0.0;
  for (auto& c : r.per_class) {
    c.precision = c.predicted == 0 ? 0.0 : static_cast<double>(c.true_positive) / c.predicted;
    c.recall = c.support == 0 ? 0.0 : static_cast<double>(c.true_positive) / c.support;
    const double denom = c.precision + c.recall;
    c.f1 = denom == 0.0 ? 0.0 : 2.0 * c.precision * c.recall / denom;
    f1_sum += c.f1;
  }
  r.macro_f1 = num_classes == 0 ? 0.0 : f1_sum / static_cast<double>(num_classes);
  return r;
}

EvalResult evaluate(const ModelParams& model, const GraphBundle& bundle, Split split) {
  const auto rows = rows_of(bundle, split);
  if (rows.empty()) {
    throw Error("metrics.empty_split", "split '" + std::string(split_name(split)) + "' is empty");
  }
  NoGradGuard no_grad;
  const ForwardPass pass = forward(model, bundle, /*with_projections=*/false);
  return score_rows(pass.log_probs.value(), bundle, rows);
}

nlohmann::json to_json(const EpochRecord& r, bool include_wall_clock) {
  nlohmann::json pairs;
  for (ViewPair p : kAllPairs) pairs[std::string(pair_name(p))] = r.train.per_pair[static_cast<std::size_t>(p)];
  nlohmann::json j = {
      {"epoch", r.epoch},
      {"l_ce", r.train.l_ce},
      {"l_cl", r.train.l_cl},
      {"l_total", r.train.l_total},
      {"per_pair", pairs},
      {"mi_lower_bound", r.train.mi_lower_bound},
      {"zero_row_count", r.train.zero_row_count},
      {"val_ce", r.val_ce},
      {"val_total", r.val_total},
      {"val_acc", r.val_accuracy},
      {"val_f1", r.val_macro_f1},
  };
  if (include_wall_clock) j["seconds"] = r.seconds;
  return j;
}

LossReport compute_losses(const ModelParams& model, const GraphBundle& bundle,
                          const TrainConfig& config, Split ce_split) {
  NoGradGuard no_grad;
  const ForwardPass pass = forward(model, bundle, !config.contrastive.pairs.empty());
  LossReport r;
  const auto rows = rows_of(bundle, ce_split);
  r.l_ce = cross_entropy(pass.log_probs, bundle.labels, rows, config.ce_reduction).item();
  r.l_cl = multiview_contrastive_loss(pass.p, config.contrastive, &r.per_pair).item();
  r.l_total = r.l_ce + r.l_cl;
  r.mi_lower_bound = mi_lower_bound(r.l_cl, bundle.num_docs());
  r.zero_row_count = pass.guarded_rows;
  return r;
}

Objective build_objective(const ModelParams& model, const GraphBundle& bundle, const TrainConfig& config) {
  Objective obj;
  obj.pass = forward(model, bundle, !config.contrastive.pairs.empty());
  obj.ce = cross_entropy(obj.pass.log_probs, bundle.labels, rows_of(bundle, Split::kTrain), config.ce_reduction);
  obj.cl = multiview_contrastive_loss(obj.pass.p, config.contrastive, &obj.per_pair);
  obj.total = total_loss(obj.ce, obj.cl);
  return obj;
}

TrainResult train(const GraphBundle& bundle, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto train_rows = rows_of(bundle, Split::kTrain);
  const auto val_rows = rows_of(bundle, Split::kVal);
  if (train_rows.empty()) throw Error("training.empty_split", "no training documents");
  if (val_rows.empty()) throw Error("training.empty_split", "no validation documents");
  const bool val_needs_cl = !config.contrastive.pairs.empty() && config.early_stop_metric == EarlyStopMetric::kValTotal;

  TrainResult result;
  ModelParams model = init_model(config.model, bundle, config.seed);
  const auto params = model.parameters();
  AdamState adam;
  double best = std::numeric_limits<double>::infinity();
  double best_significant = std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  result.model = model.clone();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;

    model.zero_grad();
    const Objective obj = build_objective(model, bundle, config);
    if (!std::isfinite(obj.total.item())) {
      throw Error("training.non_finite_loss", "non-finite loss at epoch " + std::to_string(epoch));
    }
    const Tensor& loss = obj.total;
    rec.train.per_pair = obj.per_pair;
    rec.train.l_ce = obj.ce.item();
    rec.train.l_cl = obj.cl.item();
    rec.train.l_total = loss.item();
    rec.train.mi_lower_bound = mi_lower_bound(rec.train.l_cl, bundle.num_docs());
    rec.train.zero_row_count = obj.pass.guarded_rows;
    backward(loss);
    adam_step(params, adam, config.learning_rate);

    {
      NoGradGuard no_grad;
      const ForwardPass val = forward(model, bundle, val_needs_cl);
      rec.val_ce = cross_entropy(val.log_probs, bundle.labels, val_rows, config.ce_reduction).item();
      rec.val_total = rec.val_ce;
      if (val_needs_cl) rec.val_total += multiview_contrastive_loss(val.p, config.contrastive).item();
      const EvalResult scores = score_rows(val.log_probs.value(), bundle, val_rows);
      rec.val_accuracy = scores.accuracy;
      rec.val_macro_f1 = scores.macro_f1;
    }
    if (!std::isfinite(rec.val_ce) || !std::isfinite(rec.val_total)) {
      throw Error("training.non_finite_loss", "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double monitored =
        config.early_stop_metric == EarlyStopMetric::kValTotal ? rec.val_total : rec.val_ce;
    // The snapshot follows the best value seen; patience only resets on an
    // improvement larger than min_improvement.
    if (monitored < best) {
      best = monitored;
      result.best_epoch = epoch;
      result.model = model.clone();
    }
    if (monitored < best_significant - config.min_improvement) {
      best_significant = monitored;
      since_improvement = 0;
    } else if (++since_improvement >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_val_loss = best;
  return result;
}

std::vector<PairSet> ablation_grid() {
  using enum ViewPair;
  const PairSet none = PairSet::none();
  return {none,
          none.with(kWordTag),
          none.with(kTagEntity),
          none.with(kWordEntity),
          none.with(kWordTag).with(kTagEntity),
          none.with(kWordTag).with(kWordEntity),
          none.with(kTagEntity).with(kWordEntity),
          PairSet::all()};
}

std::vector<AblationRow> run_ablation(const GraphBundle& bundle, const TrainConfig& base,
                                      std::span<const std::uint64_t> seeds, std::size_t threads) {
  if (seeds.empty()) throw Error("config.seeds", "ablation needs at least one seed");
  base.validate();
  const auto grid = ablation_grid();
  std::vector<AblationRow> rows(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    rows[r].pairs = grid[r];
    rows[r].runs.resize(seeds.size());
  }
  const std::size_t jobs = grid.size() * seeds.size();
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t r = job / seeds.size();
      const std::size_t s = job % seeds.size();
      try {
        TrainConfig cfg = base;
        cfg.seed = seeds[s];
        cfg.contrastive.pairs = grid[r];
        const TrainResult trained = train(bundle, cfg);
        const EvalResult test = evaluate(trained.model, bundle, Split::kTest);
        rows[r].runs[s] = {seeds[s], test.accuracy, test.macro_f1, trained.best_epoch};
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& row : rows) {
    std::vector<double> acc, f1;
    for (const auto& c : row.runs) {
      acc.push_back(c.accuracy);
      f1.push_back(c.macro_f1);
    }
    row.mean_accuracy = mean_of(acc);
    row.std_accuracy = population_std(acc);
    row.mean_macro_f1 = mean_of(f1);
    row.std_macro_f1 = population_std(f1);
  }
  return rows;
}

std::size_t configured_threads() {
  if (const char* env = std::getenv("SIMSTC_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

}  // namespace simstc
