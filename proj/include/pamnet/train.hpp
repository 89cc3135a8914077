#ifndef PAMNET_TRAIN_HPP_
#define PAMNET_TRAIN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pamnet/dataset.hpp"
#include "pamnet/metrics.hpp"
#include "pamnet/model.hpp"

namespace pamnet {

enum class LossKind { kMae, kSmoothL1 };

struct TrainConfig {
  int batch_size = 32;
  double initial_lr = 1e-4;
  double warmup_epochs = 1.0;
  double decay_ratio = 0.1;
  double decay_period_epochs = 600.0;
  int max_epochs = 900;
  LossKind loss = LossKind::kMae;
  double ema_decay = 0.999;
  int early_stop_patience = 30;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const {
    if (batch_size < 1 || max_epochs < 1 || early_stop_patience < 1)
      throw ConfigError("train: batch_size, max_epochs, patience must be positive");
    if (initial_lr <= 0 || warmup_epochs < 0 || decay_period_epochs <= 0)
      throw ConfigError("train: lr and schedule values must be positive");
    if (decay_ratio <= 0 || decay_ratio > 1) throw ConfigError("train: decay_ratio must be in (0, 1]");
    if (ema_decay < 0 || ema_decay > 1) throw ConfigError("train: ema_decay must be in [0, 1]");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& t) {
  j = nlohmann::json{{"batch_size", t.batch_size},
                     {"initial_lr", t.initial_lr},
                     {"warmup_epochs", t.warmup_epochs},
                     {"decay_ratio", t.decay_ratio},
                     {"decay_period_epochs", t.decay_period_epochs},
                     {"max_epochs", t.max_epochs},
                     {"loss", t.loss == LossKind::kMae ? "mae" : "smooth_l1"},
                     {"ema_decay", t.ema_decay},
                     {"early_stop_patience", t.early_stop_patience},
                     {"seed", t.seed},
                     {"standardize", t.standardize}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& t) {
  t.batch_size = j.value("batch_size", t.batch_size);
  t.initial_lr = j.value("initial_lr", t.initial_lr);
  t.warmup_epochs = j.value("warmup_epochs", t.warmup_epochs);
  t.decay_ratio = j.value("decay_ratio", t.decay_ratio);
  t.decay_period_epochs = j.value("decay_period_epochs", t.decay_period_epochs);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  const std::string loss = j.value("loss", std::string("mae"));
  if (loss == "mae")
    t.loss = LossKind::kMae;
  else if (loss == "smooth_l1")
    t.loss = LossKind::kSmoothL1;
  else
    throw ConfigError("train: unknown loss '" + loss + "'");
  t.ema_decay = j.value("ema_decay", t.ema_decay);
  t.early_stop_patience = j.value("early_stop_patience", t.early_stop_patience);
  t.seed = j.value("seed", t.seed);
  t.standardize = j.value("standardize", t.standardize);
}

/// Linear warm-up over warmup_epochs, then continuous exponential decay by
/// `ratio` every `period` epochs counted from the end of the warm-up:
/// lr(e) = lr0 * min(1, e/warmup) * ratio^(max(0, e - warmup)/period).
/// At warm-up fraction f the rate is exactly f*lr0, and one full decay
/// period multiplies it by exactly `ratio`.
inline double lr_at(const TrainConfig& cfg, double epoch_float) {
  const double warm = cfg.warmup_epochs > 0 ? std::min(1.0, epoch_float / cfg.warmup_epochs) : 1.0;
  const double past = std::max(0.0, epoch_float - cfg.warmup_epochs);
  return cfg.initial_lr * warm * std::pow(cfg.decay_ratio, past / cfg.decay_period_epochs);
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // mean per-molecule loss on the standardized scale
  double valid_metric = 0;  // de-standardized validation MAE
  double lr = 0;
};

struct TrainResult {
  ParameterStore best;   // EMA shadows of the best-validation epoch, as live values
  ParameterStore live;   // final live parameters
  std::vector<EpochRecord> history;
  std::vector<double> step_losses;
  double target_mean = 0;
  double target_std = 1;
  int best_epoch = -1;
};

struct LabeledGraph {
  Featurized features;
  std::vector<double> target;  // raw (un-standardized); size 1 or 3
  std::string id;
};

inline std::vector<LabeledGraph> featurize_labeled(const PamNet& model, const std::vector<Structure>& mols) {
  const std::size_t want = model.config().head == Head::kVector ? 3 : 1;
  std::vector<LabeledGraph> out;
  out.reserve(mols.size());
  for (const auto& s : mols) {
    if (!s.label || s.label->size() != want)
      throw ConfigError("train: structure '" + s.id + "' needs a " +
                        (want == 1 ? std::string("scalar") : std::string("3-vector")) + " label");
    out.push_back({model.featurize(s), *s.label, s.id});
  }
  return out;
}

/// Single-writer training loop: shuffled mini-batches, Adam with the
/// warm-up/decay schedule, EMA shadows for evaluation, early stopping on
/// validation loss with best-EMA restore. Deterministic for a fixed seed.
inline TrainResult train(PamNet& model, const std::vector<Structure>& train_set,
                         const std::vector<Structure>& valid_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || valid_set.empty()) throw ConfigError("train: empty train or valid split");
  const bool vector_head = model.config().head == Head::kVector;

  auto train_graphs = featurize_labeled(model, train_set);
  auto valid_graphs = featurize_labeled(model, valid_set);

  TrainResult result;
  // Only scalar heads train on standardized targets. Vector components
  // standardized per-axis would break equivariance, and a magnitude output
  // is nonnegative while standardized targets are not.
  if (cfg.standardize && model.config().head == Head::kScalar) {
    double mean = 0;
    for (const auto& g : train_graphs) mean += g.target[0];
    mean /= static_cast<double>(train_graphs.size());
    double var = 0;
    for (const auto& g : train_graphs) var += (g.target[0] - mean) * (g.target[0] - mean);
    var /= static_cast<double>(train_graphs.size());
    result.target_mean = mean;
    result.target_std = var > 0 ? std::sqrt(var) : 1.0;
  }
  const double t_mean = result.target_mean, t_std = result.target_std;

  auto& store = model.store();
  const int steps_per_epoch =
      static_cast<int>((train_graphs.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                       static_cast<std::size_t>(cfg.batch_size));

  // Validation model built once; per epoch it receives the EMA shadows as
  // live values so the training parameters are never touched.
  PamNet eval_model(model.config(), store.clone());
  auto eval_valid_mae = [&] {
    eval_model.store().copy_values_from(store, /*from_ema=*/true);
    double acc = 0;
    for (const auto& g : valid_graphs) {
      if (vector_head) {
        const Prediction p = eval_model.predict(g.features);
        for (int c = 0; c < 3; ++c)
          acc += std::abs(p.u[static_cast<std::size_t>(c)] - g.target[static_cast<std::size_t>(c)]) / 3.0;
      } else {
        const double pred = eval_model.predict(g.features).value * t_std + t_mean;
        acc += std::abs(pred - g.target[0]);
      }
    }
    return acc / static_cast<double>(valid_graphs.size());
  };

  double best_valid = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long global_step = 0;

  std::vector<std::size_t> order(train_graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch) + 1);
    shuffle_rng.shuffle(order);

    double epoch_loss = 0;
    double last_lr = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      const double epoch_float = epoch + static_cast<double>(step) / steps_per_epoch;
      const double lr = lr_at(cfg, epoch_float);
      last_lr = lr;

      const std::size_t begin = static_cast<std::size_t>(step) * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - begin);

      store.zero_grad();
      double batch_loss = 0;
      try {
        for (std::size_t k = begin; k < end; ++k) {
          const auto& g = train_graphs[order[k]];
          auto out = model.forward(g.features);
          ad::Tensor target(1, vector_head ? 3 : 1);
          if (vector_head) {
            for (int c = 0; c < 3; ++c) target.v[static_cast<std::size_t>(c)] = g.target[static_cast<std::size_t>(c)];
          } else {
            target.v[0] = (g.target[0] - t_mean) / t_std;
          }
          auto loss = cfg.loss == LossKind::kMae ? ad::mae_loss(out, target)
                                                 : ad::smooth_l1_loss(out, target);
          batch_loss += loss->val.v[0];
          ad::backward(ad::scale(loss, inv_batch));
        }
      } catch (const NumericError& e) {
        throw NumericError("train: aborted at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step) + ": " + e.what());
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step));
      store.adam_step(lr);
      store.ema_update(cfg.ema_decay);
      result.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss;
      ++global_step;
    }
    epoch_loss /= steps_per_epoch;

    const double valid_mae = eval_valid_mae();
    result.history.push_back({epoch, epoch_loss, valid_mae, last_lr});

    if (valid_mae < best_valid) {
      best_valid = valid_mae;
      result.best = store.clone();
      result.best.load_ema_into_params();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  if (result.best_epoch < 0) {
    result.best = store.clone();
    result.best.load_ema_into_params();
  }
  result.live = store.clone();
  return result;
}

namespace detail {

inline double sample_std(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - m) * (x - m);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace detail

/// Metrics on de-standardized predictions. Vector-head models evaluate per
/// component (three targets) with a flattened overall report.
inline MetricsReport evaluate(const PamNet& model, const std::vector<Structure>& dataset,
                              double target_mean = 0.0, double target_std = 1.0) {
  if (dataset.empty()) throw ConfigError("evaluate: empty dataset");

  if (model.config().head == Head::kVector) {
    std::array<std::vector<double>, 3> preds, truths;
    for (const auto& s : dataset) {
      if (!s.label || s.label->size() != 3)
        throw ConfigError("evaluate: structure '" + s.id + "' lacks a 3-vector label");
      const Prediction p = model.predict(s);
      for (std::size_t c = 0; c < 3; ++c) {
        preds[c].push_back(p.u[c]);
        truths[c].push_back((*s.label)[c]);
      }
    }
    std::vector<double> flat_p, flat_t, maes, stds;
    for (std::size_t c = 0; c < 3; ++c) {
      const MetricsReport per = compute_metrics(preds[c], truths[c]);
      maes.push_back(per.mae);
      stds.push_back(detail::sample_std(truths[c]));
      flat_p.insert(flat_p.end(), preds[c].begin(), preds[c].end());
      flat_t.insert(flat_t.end(), truths[c].begin(), truths[c].end());
    }
    MetricsReport r = compute_metrics(flat_p, flat_t);
    r.per_target_mae = maes;
    bool all_positive = true;
    for (double s : stds) all_positive &= s > 0;
    if (all_positive) r.std_mae = std_mae(maes, stds);
    return r;
  }

  std::vector<double> preds, truths;
  for (const auto& s : dataset) {
    if (!s.label || s.label->size() != 1)
      throw ConfigError("evaluate: structure '" + s.id + "' lacks a scalar label");
    preds.push_back(model.predict(s).value * target_std + target_mean);
    truths.push_back((*s.label)[0]);
  }
  MetricsReport r = compute_metrics(preds, truths);
  const double sd = detail::sample_std(truths);
  if (sd > 0) r.std_mae = std_mae({r.mae}, {sd});
  return r;
}

}  // namespace pamnet

#endif  // PAMNET_TRAIN_HPP_
