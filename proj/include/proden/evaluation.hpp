#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "proden/datagen.hpp"
#include "proden/metrics.hpp"
#include "proden/netcore.hpp"
#include "proden/weighting.hpp"

namespace proden {

// First index of the largest entry.
inline std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

using Confusion = std::vector<std::vector<std::size_t>>;  // [true][predicted]

struct EvalReport {
  double test_accuracy = 0.0;
  std::optional<double> transductive_accuracy;
  Confusion confusion;
};

inline Confusion confusion_matrix(const ModelParams& params, const SupervisedDataset& test) {
  if (test.size() == 0) throw DomainError("test set is empty");
  const Matrix probs = predict_proba(params, test.features);
  const std::size_t c = std::max(test.class_count, params.output_dim());
  Confusion counts(c, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < test.size(); ++i) ++counts[test.labels[i]][argmax(probs.row(i))];
  return counts;
}

inline double confusion_accuracy(const Confusion& counts) {
  std::size_t hits = 0, total = 0;
  for (std::size_t y = 0; y < counts.size(); ++y) {
    for (std::size_t p = 0; p < counts[y].size(); ++p) {
      total += counts[y][p];
      if (p == y) hits += counts[y][p];
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

// Fraction of test rows whose predicted argmax matches the label.
inline double test_accuracy(const ModelParams& params, const SupervisedDataset& test) {
  return confusion_accuracy(confusion_matrix(params, test));
}

// Fraction of training rows whose weight argmax is the hidden true label.
inline double transductive_accuracy(const WeightMatrix& weights, const std::optional<std::vector<std::size_t>>& truth) {
  if (!truth) throw MissingTruthError("transductive accuracy needs hidden true labels");
  if (truth->size() != weights.size()) throw ShapeError("hidden truth length differs from weight rows");
  if (weights.size() == 0) throw DomainError("no training rows");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) hits += argmax(weights.row(i)) == (*truth)[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(weights.size());
}

// Alternative reading: the model's argmax over the full label set on the
// training rows.
inline double model_transductive_accuracy(const ModelParams& params, const PartialDataset& train) {
  if (!train.hidden_truth) throw MissingTruthError("transductive accuracy needs hidden true labels");
  if (train.size() == 0) throw DomainError("no training rows");
  const Matrix probs = predict_proba(params, train.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < train.size(); ++i) hits += argmax(probs.row(i)) == (*train.hidden_truth)[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(train.size());
}

inline EvalReport evaluate(const ModelParams& params, const SupervisedDataset& test, const WeightMatrix* weights = nullptr,
                           const std::optional<std::vector<std::size_t>>& truth = std::nullopt) {
  EvalReport report;
  report.confusion = confusion_matrix(params, test);
  report.test_accuracy = confusion_accuracy(report.confusion);
  if (weights && truth) report.transductive_accuracy = transductive_accuracy(*weights, truth);
  return report;
}

// One row per (true, predicted) cell plus the headline accuracies.
inline void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "metric,value\n";
  out << "test_acc," << detail::format_double(report.test_accuracy) << '\n';
  if (report.transductive_accuracy) {
    out << "transductive_acc," << detail::format_double(*report.transductive_accuracy) << '\n';
  }
  for (std::size_t y = 0; y < report.confusion.size(); ++y) {
    for (std::size_t p = 0; p < report.confusion[y].size(); ++p) {
      out << "confusion[" << y << "][" << p << "]," << report.confusion[y][p] << '\n';
    }
  }
}

inline std::string format_summary(const EvalReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "test accuracy:         " << 100.0 * report.test_accuracy << "%\n";
  if (report.transductive_accuracy) out << "transductive accuracy: " << 100.0 * *report.transductive_accuracy << "%\n";
  out << "confusion (rows = true class):\n";
  for (const auto& row : report.confusion) {
    out << ' ';
    for (auto v : row) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

// Mean test accuracy over the last `window` epochs of a run.
inline double final_test_accuracy(const MetricsLog& log, std::size_t window = 10) {
  if (log.records.empty()) throw DomainError("metrics log is empty");
  const std::size_t take = std::min(window, log.records.size());
  double total = 0.0;
  for (std::size_t k = log.records.size() - take; k < log.records.size(); ++k) total += log.records[k].test_accuracy;
  return total / static_cast<double>(take);
}

inline double final_transductive_accuracy(const MetricsLog& log, std::size_t window = 10) {
  if (log.records.empty()) throw DomainError("metrics log is empty");
  const std::size_t take = std::min(window, log.records.size());
  double total = 0.0;
  for (std::size_t k = log.records.size() - take; k < log.records.size(); ++k) {
    total += log.records[k].transductive_accuracy;
  }
  return total / static_cast<double>(take);
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Sample mean and (n - 1) standard deviation. Values are summed in sorted
// order so the result does not depend on input order.
inline MeanStd mean_std(std::vector<double> values) {
  if (values.size() < 2) throw DomainError("need at least 2 values for a sample standard deviation");
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size() - 1))};
}

struct SeedSummary {
  MeanStd test_accuracy;
  MeanStd transductive_accuracy;
};

inline SeedSummary summarize_seeds(std::span<const MetricsLog> logs) {
  if (logs.size() < 2) throw DomainError("summarizing seeds needs at least 2 runs");
  std::vector<double> test, trans;
  for (const auto& log : logs) {
    test.push_back(final_test_accuracy(log));
    trans.push_back(final_transductive_accuracy(log));
  }
  return {mean_std(test), mean_std(trans)};
}

}  // namespace proden
