#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "proden/datagen.hpp"
#include "proden/evaluation.hpp"
#include "proden/losses.hpp"
#include "proden/metrics.hpp"
#include "proden/netcore.hpp"
#include "proden/weighting.hpp"

namespace proden {

enum class TrainMode { Proden, PnOracle, PnDecomp };

inline std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Proden: return "proden";
    case TrainMode::PnOracle: return "pn-oracle";
    case TrainMode::PnDecomp: return "pn-decomp";
  }
  return "?";
}

inline TrainMode parse_train_mode(std::string_view s) {
  if (s == "proden") return TrainMode::Proden;
  if (s == "pn-oracle") return TrainMode::PnOracle;
  if (s == "pn-decomp") return TrainMode::PnDecomp;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected proden, pn-oracle or pn-decomp)");
}

struct TrainConfig {
  int epochs = 500;
  std::size_t batch_size = 256;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double l2 = 1e-4;
  LossKind loss = LossKind::CrossEntropy;
  Strategy strategy = Strategy::progressive();
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Proden;
  bool transductive_from_model = false;  // model argmax instead of weight argmax
  bool record_wall_clock = false;        // otherwise the seconds column stays 0

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(l2 >= 0.0)) throw ConfigError("l2 coefficient must be nonnegative");
    if (strategy.kind == Strategy::Kind::IteraEm && strategy.period < 1) throw ConfigError("EM period must be >= 1");
  }
};

// Momentum buffers, one per parameter.
struct OptimizerState {
  ModelParams velocity;

  static OptimizerState for_params(const ModelParams& params) { return {params.zeros_like()}; }
};

// v <- beta * v - lr * grad;  theta <- theta + v
inline void momentum_step(ModelParams& params, OptimizerState& state, const ModelParams& grads, double learning_rate,
                          double momentum) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto w = params.layers[l].weight.values();
    auto vw = state.velocity.layers[l].weight.values();
    const auto gw = grads.layers[l].weight.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      vw[k] = momentum * vw[k] - learning_rate * gw[k];
      w[k] += vw[k];
    }
    auto& b = params.layers[l].bias;
    auto& vb = state.velocity.layers[l].bias;
    const auto& gb = grads.layers[l].bias;
    for (std::size_t k = 0; k < b.size(); ++k) {
      vb[k] = momentum * vb[k] - learning_rate * gb[k];
      b[k] += vb[k];
    }
  }
}

// Mean weighted loss of a batch and its gradient on the probabilities
// (already divided by the batch size).
inline LossValue batch_objective(const Matrix& probs, std::span<const std::size_t> rows, const WeightMatrix& weights,
                                 LossKind kind) {
  const std::size_t m = rows.size();
  LossValue out{0.0, Matrix(m, probs.cols())};
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t b = 0; b < m; ++b) {
    const auto i = rows[b];
    out.value += weighted_loss(probs.row(b), weights.candidates(i), weights.row(i), kind);
    weighted_loss_grad_on_probs(probs.row(b), weights.candidates(i), weights.row(i), kind, out.grad_on_probs.row(b));
    for (double& g : out.grad_on_probs.row(b)) g *= scale;
  }
  out.value *= scale;
  return out;
}

// (1/n) sum_i sum_j w_ij l(g_j(x_i), e^{S_i}_j)
inline double empirical_risk(const ModelParams& params, const WeightMatrix& weights, const PartialDataset& data,
                             LossKind kind) {
  if (weights.size() != data.size()) throw ShapeError("weight rows differ from dataset size");
  if (data.size() == 0) return 0.0;
  const Matrix probs = predict_proba(params, data.features);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += weighted_loss(probs.row(i), weights.candidates(i), weights.row(i), kind);
  return total / static_cast<double>(data.size());
}

struct TrainResult {
  ModelParams params;
  WeightMatrix weights;
  MetricsLog log;
};

// Called after every epoch with the 1-based epoch number.
using EpochCallback = std::function<void(int, const ModelParams&, const WeightMatrix&)>;

inline constexpr double kDivergenceRisk = 1e6;

namespace detail {

using TransductiveFn = std::function<double(const ModelParams&, const WeightMatrix&)>;

// Mini-batch loop shared by every mode. `train` must already carry the
// candidate sets the mode optimizes against.
inline TrainResult run_training(const TrainConfig& config, const PartialDataset& train, const SupervisedDataset& test,
                                const Architecture& arch, const TransductiveFn& transductive,
                                const EpochCallback& on_epoch) {
  config.validate();
  if (train.size() == 0) throw ConfigError("training set is empty");
  if (test.size() > 0 && test.feature_dim() != train.feature_dim()) {
    throw ConfigError("train and test feature dimensions differ");
  }

  TrainResult result;
  result.params = init_params(arch, train.feature_dim(), train.class_count, config.seed);
  result.weights = init_uniform(train.candidates);
  OptimizerState optimizer = OptimizerState::for_params(result.params);
  Rng shuffle_rng(config.seed, Stream::Shuffle);

  std::vector<std::size_t> everyone(train.size());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto batches = split_minibatches(train.size(), config.batch_size, shuffle_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& rows = batches[b];
      const ForwardTrace trace = forward(result.params, train.features.gather_rows(rows));
      // Loss and gradient use the weights from before this batch's update.
      const LossValue loss = batch_objective(trace.probs, rows, result.weights, config.loss);
      if (!std::isfinite(loss.value)) {
        throw DivergenceError("non-finite batch loss", epoch, static_cast<int>(b + 1));
      }
      const ModelParams grads = backward(result.params, trace, loss.grad_on_probs, config.l2);
      apply_strategy(config.strategy, epoch, BatchPhase::AfterBatch, result.weights, rows, trace.probs);
      momentum_step(result.params, optimizer, grads, config.learning_rate, config.momentum);
    }
    if (wants_full_refresh(config.strategy, epoch)) {
      apply_strategy(config.strategy, epoch, BatchPhase::EpochEnd, result.weights, everyone,
                     predict_proba(result.params, train.features));
    }

    EpochRecord record;
    record.epoch = epoch;
    record.risk = empirical_risk(result.params, result.weights, train, config.loss);
    if (!std::isfinite(record.risk) || record.risk > kDivergenceRisk) {
      throw DivergenceError("weighted empirical risk diverged", epoch, static_cast<int>(batches.size()));
    }
    record.test_accuracy = test.size() > 0 ? test_accuracy(result.params, test) : 0.0;
    record.transductive_accuracy = transductive ? transductive(result.params, result.weights) : 0.0;
    if (config.record_wall_clock) {
      record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.log.records.push_back(record);
    if (on_epoch) on_epoch(epoch, result.params, result.weights);
  }
  return result;
}

inline PartialDataset as_singletons(const SupervisedDataset& data) {
  PartialDataset out;
  out.features = data.features;
  out.class_count = data.class_count;
  out.hidden_truth = data.labels;
  out.candidates.reserve(data.size());
  for (auto y : data.labels) out.candidates.push_back(LabelSet::singleton(data.class_count, y));
  return out;
}

// Candidate-restricted argmax of the model on the original rows.
inline double candidate_argmax_accuracy(const ModelParams& params, const PartialDataset& data) {
  if (!data.hidden_truth) return 0.0;
  const Matrix probs = predict_proba(params, data.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += best_guess(probs.row(i), data.candidates[i], LossKind::CrossEntropy) == (*data.hidden_truth)[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace detail

// Ordinary supervised training on the true labels with the same optimizer.
inline TrainResult train_pn_oracle(TrainConfig config, const SupervisedDataset& train, const SupervisedDataset& test,
                                   const Architecture& arch, const EpochCallback& on_epoch = {}) {
  config.strategy = Strategy::naive();
  const PartialDataset singletons = detail::as_singletons(train);
  auto trans = [&](const ModelParams& p, const WeightMatrix& w) {
    return config.transductive_from_model ? model_transductive_accuracy(p, singletons)
                                          : transductive_accuracy(w, singletons.hidden_truth);
  };
  return detail::run_training(config, singletons, test, arch, trans, on_epoch);
}

// Splits every (x, S) into |S| supervised pairs (x, j), j in S, and runs
// ordinary training on the expansion. The returned weights are those of the
// expanded set; transductive accuracy is the candidate argmax of the model
// on the original rows.
inline TrainResult train_pn_decomp(const TrainConfig& config, const PartialDataset& train,
                                   const SupervisedDataset& test, const Architecture& arch,
                                   const EpochCallback& on_epoch = {}) {
  std::vector<std::size_t> source;
  PartialDataset expanded;
  expanded.class_count = train.class_count;
  for (std::size_t i = 0; i < train.size(); ++i) {
    train.candidates[i].for_each([&](std::size_t j) {
      source.push_back(i);
      expanded.candidates.push_back(LabelSet::singleton(train.class_count, j));
    });
  }
  expanded.features = train.features.gather_rows(source);
  TrainConfig cfg = config;
  cfg.strategy = Strategy::naive();
  auto trans = [&](const ModelParams& p, const WeightMatrix&) {
    return config.transductive_from_model ? model_transductive_accuracy(p, train)
                                          : detail::candidate_argmax_accuracy(p, train);
  };
  return detail::run_training(cfg, expanded, test, arch, trans, on_epoch);
}

// Progressive identification: weighted-risk minimization with the label
// weights refreshed per the configured strategy. Dispatches to the
// reference modes when config.mode asks for them.
inline TrainResult train(const TrainConfig& config, const PartialDataset& train_data, const SupervisedDataset& test,
                         const Architecture& arch, const EpochCallback& on_epoch = {}) {
  config.validate();
  train_data.validate();
  switch (config.mode) {
    case TrainMode::PnOracle: {
      if (!train_data.hidden_truth) throw ConfigError("pn-oracle mode needs hidden true labels");
      SupervisedDataset supervised{train_data.features, *train_data.hidden_truth, train_data.class_count};
      return train_pn_oracle(config, supervised, test, arch, on_epoch);
    }
    case TrainMode::PnDecomp:
      return train_pn_decomp(config, train_data, test, arch, on_epoch);
    case TrainMode::Proden:
      break;
  }
  auto trans = [&](const ModelParams& p, const WeightMatrix& w) {
    if (!train_data.hidden_truth) return 0.0;
    return config.transductive_from_model ? model_transductive_accuracy(p, train_data)
                                          : transductive_accuracy(w, train_data.hidden_truth);
  };
  return detail::run_training(config, train_data, test, arch, trans, on_epoch);
}

}  // namespace proden
