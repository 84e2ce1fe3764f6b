#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proden/errors.hpp"
#include "proden/label_set.hpp"
#include "proden/matrix.hpp"

namespace proden {

struct Strategy {
  enum class Kind { Progressive, Sudden, Naive, IteraEm };

  Kind kind = Kind::Progressive;
  int period = 0;  // epochs between refreshes, IteraEm only

  static Strategy progressive() { return {Kind::Progressive, 0}; }
  static Strategy sudden() { return {Kind::Sudden, 0}; }
  static Strategy naive() { return {Kind::Naive, 0}; }
  static Strategy itera_em(int period) {
    if (period < 1) throw ConfigError("EM refresh period must be at least 1 epoch");
    return {Kind::IteraEm, period};
  }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

inline std::string to_string(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::Progressive: return "progressive";
    case Strategy::Kind::Sudden: return "sudden";
    case Strategy::Kind::Naive: return "naive";
    case Strategy::Kind::IteraEm: return "itera:" + std::to_string(s.period);
  }
  return "?";
}

// "progressive", "sudden", "naive", "itera" (period 100) or "itera:<period>".
inline Strategy parse_strategy(std::string_view s) {
  if (s == "progressive") return Strategy::progressive();
  if (s == "sudden") return Strategy::sudden();
  if (s == "naive") return Strategy::naive();
  if (s == "itera") return Strategy::itera_em(100);
  if (s.starts_with("itera:")) {
    int period = 0;
    for (char ch : s.substr(6)) {
      if (ch < '0' || ch > '9') throw ConfigError("bad EM period in '" + std::string(s) + "'");
      period = period * 10 + (ch - '0');
    }
    return Strategy::itera_em(period);
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

// Per-instance label confidences. Row i is a distribution supported on the
// candidate set of instance i.
class WeightMatrix {
 public:
  WeightMatrix() = default;

  std::size_t size() const noexcept { return rows_.rows(); }
  std::size_t class_count() const noexcept { return rows_.cols(); }
  const Matrix& rows() const noexcept { return rows_; }
  std::span<const double> row(std::size_t i) const { return rows_.row(i); }
  const LabelSet& candidates(std::size_t i) const { return candidates_[i]; }

  // Candidate-uniform row: 1 / |S| on every candidate.
  void reset_uniform(std::size_t i) {
    auto r = rows_.row(i);
    std::fill(r.begin(), r.end(), 0.0);
    const double w = 1.0 / static_cast<double>(candidates_[i].size());
    candidates_[i].for_each([&](std::size_t j) { r[j] = w; });
  }

  // Restores rows saved in a checkpoint; the candidate masks stay.
  void assign(const Matrix& rows) {
    require_shape(rows, rows_.rows(), rows_.cols(), "label weights");
    Matrix previous = std::exchange(rows_, rows);
    try {
      validate();
    } catch (...) {
      rows_ = std::move(previous);
      throw;
    }
  }

  // Throws unless every row is a distribution on its candidate set.
  void validate(double tolerance = 1e-9) const {
    for (std::size_t i = 0; i < size(); ++i) {
      double total = 0.0;
      const auto r = rows_.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!(r[j] >= 0.0)) throw SupportError("negative or non-finite label weight in row " + std::to_string(i));
        if (r[j] != 0.0 && !candidates_[i].contains(j)) {
          throw SupportError("label weight outside candidate set in row " + std::to_string(i));
        }
        total += r[j];
      }
      if (std::abs(total - 1.0) > tolerance) throw SupportError("row " + std::to_string(i) + " does not sum to 1");
    }
  }

  friend WeightMatrix init_uniform(std::vector<LabelSet> candidates);
  friend void update_progressive(WeightMatrix&, std::span<const std::size_t>, const Matrix&);
  friend void update_sudden(WeightMatrix&, std::span<const std::size_t>, const Matrix&);

 private:
  Matrix rows_;
  std::vector<LabelSet> candidates_;
};

inline WeightMatrix init_uniform(std::vector<LabelSet> candidates) {
  WeightMatrix w;
  const std::size_t c = candidates.empty() ? 0 : candidates.front().class_count();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty()) throw DomainError("instance " + std::to_string(i) + " has an empty candidate set");
    if (candidates[i].class_count() != c) throw ShapeError("candidate masks differ in width");
  }
  w.rows_ = Matrix(candidates.size(), c);
  w.candidates_ = std::move(candidates);
  for (std::size_t i = 0; i < w.size(); ++i) w.reset_uniform(i);
  return w;
}

namespace detail {

inline void check_batch(const WeightMatrix& w, std::span<const std::size_t> indices, const Matrix& probs) {
  require_shape(probs, indices.size(), w.class_count(), "batch probabilities");
  for (auto i : indices) {
    if (i >= w.size()) throw DomainError("instance index " + std::to_string(i) + " out of range");
  }
}

}  // namespace detail

// Candidate mass below this makes a row fall back to uniform.
inline constexpr double kMinCandidateMass = 1e-12;

// w_ij = g_j / sum_{k in S_i} g_k on the candidates, 0 elsewhere.
inline void update_progressive(WeightMatrix& w, std::span<const std::size_t> indices, const Matrix& probs) {
  detail::check_batch(w, indices, probs);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t i = indices[b];
    const auto g = probs.row(b);
    const auto& s = w.candidates_[i];
    double mass = 0.0;
    s.for_each([&](std::size_t j) { mass += g[j]; });
    if (!(mass >= kMinCandidateMass)) {
      w.reset_uniform(i);
      continue;
    }
    auto r = w.rows_.row(i);
    std::fill(r.begin(), r.end(), 0.0);
    s.for_each([&](std::size_t j) { r[j] = g[j] / mass; });
  }
}

// One-hot on the candidate argmax (ties to the smallest index).
inline void update_sudden(WeightMatrix& w, std::span<const std::size_t> indices, const Matrix& probs) {
  detail::check_batch(w, indices, probs);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t i = indices[b];
    const auto g = probs.row(b);
    std::size_t best = w.class_count();
    w.candidates_[i].for_each([&](std::size_t j) {
      if (best == w.class_count() || g[j] > g[best]) best = j;
    });
    auto r = w.rows_.row(i);
    std::fill(r.begin(), r.end(), 0.0);
    r[best] = 1.0;
  }
}

enum class BatchPhase { AfterBatch, EpochEnd };

// True when `strategy` refreshes every row at the end of (1-based) `epoch`.
inline bool wants_full_refresh(const Strategy& strategy, int epoch) {
  return strategy.kind == Strategy::Kind::IteraEm && epoch % strategy.period == 0;
}

// Progressive and Sudden update the batch rows after every mini-batch.
// IteraEm refreshes all rows from full-data predictions at the end of every
// period-th epoch. Naive never updates. Returns whether anything changed.
inline bool apply_strategy(const Strategy& strategy, int epoch, BatchPhase phase, WeightMatrix& weights,
                           std::span<const std::size_t> indices, const Matrix& probs) {
  switch (strategy.kind) {
    case Strategy::Kind::Progressive:
      if (phase != BatchPhase::AfterBatch) return false;
      update_progressive(weights, indices, probs);
      return true;
    case Strategy::Kind::Sudden:
      if (phase != BatchPhase::AfterBatch) return false;
      update_sudden(weights, indices, probs);
      return true;
    case Strategy::Kind::Naive:
      return false;
    case Strategy::Kind::IteraEm:
      if (phase != BatchPhase::EpochEnd || !wants_full_refresh(strategy, epoch)) return false;
      update_progressive(weights, indices, probs);
      return true;
  }
  return false;
}

}  // namespace proden
