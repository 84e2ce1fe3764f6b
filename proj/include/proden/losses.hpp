#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proden/errors.hpp"
#include "proden/label_set.hpp"

namespace proden {

enum class LossKind { CrossEntropy, MeanSquaredError };

inline std::string to_string(LossKind kind) { return kind == LossKind::CrossEntropy ? "ce" : "mse"; }

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "ce" || s == "cross-entropy") return LossKind::CrossEntropy;
  if (s == "mse") return LossKind::MeanSquaredError;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected ce or mse)");
}

// Probabilities are clamped here before taking logs.
inline constexpr double kLogFloor = 1e-12;

inline double clamped_log(double p) { return std::log(std::max(p, kLogFloor)); }

// e^y as a class index; the dense vector is implied.
struct OneHot {
  std::size_t index = 0;
};

// Loss contributed by one coordinate: l(g_j, e_j).
inline double coordinate_loss(double prob, double target, LossKind kind) {
  if (kind == LossKind::CrossEntropy) return target == 0.0 ? 0.0 : -target * clamped_log(prob);
  const double diff = prob - target;
  return diff * diff;
}

inline double ordinary_loss(std::span<const double> probs, OneHot target, LossKind kind) {
  if (target.index >= probs.size()) {
    throw DomainError("target class " + std::to_string(target.index) + " outside [0, " +
                      std::to_string(probs.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    total += coordinate_loss(probs[i], i == target.index ? 1.0 : 0.0, kind);
  }
  return total;
}

namespace detail {

inline void require_candidates(std::span<const double> probs, const LabelSet& candidates) {
  if (candidates.empty()) throw DomainError("candidate set is empty");
  if (candidates.class_count() != probs.size()) throw ShapeError("candidate mask width differs from class count");
}

}  // namespace detail

// Smallest ordinary loss over the candidate labels.
inline double pll_min_loss(std::span<const double> probs, const LabelSet& candidates, LossKind kind) {
  detail::require_candidates(probs, candidates);
  double best = std::numeric_limits<double>::infinity();
  candidates.for_each([&](std::size_t i) { best = std::min(best, ordinary_loss(probs, OneHot{i}, kind)); });
  return best;
}

// Candidate with the smallest loss. For CE and MSE the loss is strictly
// decreasing in g_i, so this is the candidate argmax of probs; ties go to
// the smallest index.
inline std::size_t best_guess(std::span<const double> probs, const LabelSet& candidates, LossKind /*kind*/) {
  detail::require_candidates(probs, candidates);
  std::size_t best = candidates.class_count();
  candidates.for_each([&](std::size_t i) {
    if (best == candidates.class_count() || probs[i] > probs[best]) best = i;
  });
  return best;
}

inline constexpr double kWeightTolerance = 1e-9;

inline void check_weights(std::span<const double> weights, const LabelSet& candidates) {
  if (weights.size() != candidates.class_count()) throw ShapeError("weight vector width differs from class count");
  double inside = 0.0;
  double outside = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] < 0.0) throw SupportError("negative label weight");
    (candidates.contains(j) ? inside : outside) += weights[j];
  }
  if (outside > kWeightTolerance) throw SupportError("label weight mass outside the candidate set");
  if (std::abs(inside + outside - 1.0) > kWeightTolerance) throw SupportError("label weights do not sum to 1");
}

// sum_j w_j * l(g_j, e^S_j), where e^S is the multi-hot indicator of the
// candidate set.
inline double weighted_loss(std::span<const double> probs, const LabelSet& candidates,
                            std::span<const double> weights, LossKind kind) {
  detail::require_candidates(probs, candidates);
  check_weights(weights, candidates);
  double total = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (weights[j] == 0.0) continue;
    total += weights[j] * coordinate_loss(probs[j], candidates.contains(j) ? 1.0 : 0.0, kind);
  }
  return total;
}

// d(weighted_loss)/d(probs), written into `grad`.
inline void weighted_loss_grad_on_probs(std::span<const double> probs, const LabelSet& candidates,
                                        std::span<const double> weights, LossKind kind, std::span<double> grad) {
  detail::require_candidates(probs, candidates);
  check_weights(weights, candidates);
  if (grad.size() != probs.size()) throw ShapeError("gradient buffer width differs from class count");
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double target = candidates.contains(j) ? 1.0 : 0.0;
    if (kind == LossKind::CrossEntropy) {
      grad[j] = weights[j] == 0.0 || target == 0.0 ? 0.0 : -weights[j] * target / std::max(probs[j], kLogFloor);
    } else {
      grad[j] = 2.0 * weights[j] * (probs[j] - target);
    }
  }
}

inline std::vector<double> weighted_loss_grad_on_probs(std::span<const double> probs, const LabelSet& candidates,
                                                       std::span<const double> weights, LossKind kind) {
  std::vector<double> grad(probs.size());
  weighted_loss_grad_on_probs(probs, candidates, weights, kind, grad);
  return grad;
}

// Cross-entropy against an arbitrary nonnegative target vector,
// -sum_j z_j log g_j.
inline double soft_cross_entropy(std::span<const double> probs, std::span<const double> target) {
  if (probs.size() != target.size()) throw ShapeError("target width differs from class count");
  double total = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (target[j] != 0.0) total -= target[j] * clamped_log(probs[j]);
  }
  return total;
}

}  // namespace proden
