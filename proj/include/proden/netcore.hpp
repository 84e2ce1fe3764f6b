#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "proden/errors.hpp"
#include "proden/matrix.hpp"
#include "proden/rng.hpp"

namespace proden {

struct Architecture {
  enum class Kind : std::uint32_t { Linear = 0, Mlp = 1 };

  Kind kind = Kind::Linear;
  std::vector<std::size_t> hidden;  // empty for Linear

  static Architecture linear() { return {Kind::Linear, {}}; }
  static Architecture mlp(std::vector<std::size_t> hidden = {300, 300, 300, 300}) {
    return {Kind::Mlp, std::move(hidden)};
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

inline std::string to_string(const Architecture& arch) {
  if (arch.kind == Architecture::Kind::Linear) return "linear";
  std::string s = "mlp:";
  for (std::size_t i = 0; i < arch.hidden.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(arch.hidden[i]);
  }
  return s;
}

// "linear", "mlp" (four hidden layers of 300) or "mlp:h1,h2,...".
inline Architecture parse_architecture(std::string_view s) {
  if (s == "linear") return Architecture::linear();
  if (s == "mlp") return Architecture::mlp();
  if (s.starts_with("mlp:")) {
    std::vector<std::size_t> hidden;
    std::string_view rest = s.substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      std::size_t width = 0;
      for (char ch : token) {
        if (ch < '0' || ch > '9') throw ConfigError("bad hidden width in '" + std::string(s) + "'");
        width = width * 10 + static_cast<std::size_t>(ch - '0');
      }
      if (width == 0) throw ConfigError("hidden widths must be positive in '" + std::string(s) + "'");
      hidden.push_back(width);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
    return Architecture::mlp(std::move(hidden));
  }
  throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

struct DenseLayer {
  Matrix weight;              // out x in
  std::vector<double> bias;   // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Parameters of g(x; theta). Gradients use the same type.
struct ModelParams {
  Architecture arch;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].bias.size() != layers[l].weight.rows()) throw ShapeError("bias width differs from layer output");
      if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows()) {
        throw ShapeError("layer " + std::to_string(l) + " input does not chain with previous output");
      }
      for (double v : layers[l].weight.values()) {
        if (!std::isfinite(v)) throw NumericError("non-finite weight");
      }
      for (double v : layers[l].bias) {
        if (!std::isfinite(v)) throw NumericError("non-finite bias");
      }
    }
  }

  // Same shapes, all zeros.
  ModelParams zeros_like() const {
    ModelParams z{arch, {}};
    for (const auto& l : layers) z.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size())});
    return z;
  }

  // Flat view: layer by layer, weights row-major then biases.
  double& at(std::size_t k) {
    for (auto& l : layers) {
      if (k < l.weight.size()) return l.weight.values()[k];
      k -= l.weight.size();
      if (k < l.bias.size()) return l.bias[k];
      k -= l.bias.size();
    }
    throw DomainError("parameter index out of range");
  }
  double at(std::size_t k) const { return const_cast<ModelParams&>(*this).at(k); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Linear: one d -> c layer. MLP: d -> hidden... -> c with ReLU between.
// Weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), biases zero.
inline ModelParams init_params(const Architecture& arch, std::size_t input_dim, std::size_t class_count,
                               std::uint64_t seed) {
  if (input_dim == 0 || class_count == 0) throw DomainError("input and output dimensions must be positive");
  std::vector<std::size_t> widths{input_dim};
  if (arch.kind == Architecture::Kind::Mlp) widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(class_count);

  Rng rng(seed, Stream::Init);
  ModelParams params{arch, {}};
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    DenseLayer layer{Matrix(widths[l + 1], fan_in), std::vector<double>(widths[l + 1], 0.0)};
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

struct ForwardTrace {
  std::vector<Matrix> inputs;          // input to each layer (inputs[0] is the batch)
  std::vector<Matrix> pre_activations; // per layer, before ReLU / softmax
  Matrix probs;                        // softmax of the last pre-activation
};

// Row-wise softmax with max subtraction.
inline void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    auto p = probs.row(i);
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] = std::exp(z[j] - m);
      total += p[j];
    }
    for (double& v : p) v /= total;
  }
}

namespace detail {

// out = in * W^T + b
inline Matrix affine(const Matrix& in, const DenseLayer& layer) {
  const std::size_t out_dim = layer.weight.rows();
  Matrix out(in.rows(), out_dim);
  for (std::size_t i = 0; i < in.rows(); ++i) {
    const auto x = in.row(i);
    auto y = out.row(i);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const auto w = layer.weight.row(o);
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * x[k];
      y[o] = acc;
    }
  }
  return out;
}

}  // namespace detail

inline ForwardTrace forward(const ModelParams& params, const Matrix& batch) {
  if (batch.cols() != params.input_dim()) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                     std::to_string(params.input_dim()));
  }
  ForwardTrace trace;
  Matrix current = batch;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = detail::affine(current, params.layers[l]);
    trace.inputs.push_back(std::move(current));
    if (l + 1 < params.layers.size()) {
      current = z;
      for (double& v : current.values()) v = v > 0.0 ? v : 0.0;
    }
    trace.pre_activations.push_back(std::move(z));
  }
  softmax_rows(trace.pre_activations.back(), trace.probs);
  return trace;
}

inline Matrix predict_proba(const ModelParams& params, const Matrix& batch) {
  return forward(params, batch).probs;
}

// Gradient of L + (l2 / 2) * ||weights||^2, where `loss_grad_on_probs` is
// dL/d(probs) for the traced batch. Biases are not regularized.
inline ModelParams backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& loss_grad_on_probs,
                            double l2) {
  const std::size_t depth = params.layers.size();
  if (trace.pre_activations.size() != depth || trace.inputs.size() != depth) {
    throw ShapeError("forward trace does not match model depth");
  }
  const std::size_t m = trace.probs.rows();
  require_shape(loss_grad_on_probs, m, params.output_dim(), "loss gradient");
  for (std::size_t l = 0; l < depth; ++l) {
    require_shape(trace.pre_activations[l], m, params.layers[l].weight.rows(), "traced pre-activation");
    require_shape(trace.inputs[l], m, params.layers[l].weight.cols(), "traced layer input");
  }

  // Through the softmax: dz = p * (dp - <p, dp>).
  Matrix delta(m, params.output_dim());
  for (std::size_t i = 0; i < m; ++i) {
    const auto p = trace.probs.row(i);
    const auto dp = loss_grad_on_probs.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * dp[j];
    auto d = delta.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) d[j] = p[j] * (dp[j] - dot);
  }

  ModelParams grads = params.zeros_like();
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    auto& g = grads.layers[l];
    const Matrix& in = trace.inputs[l];
    for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
      auto gw = g.weight.row(o);
      double gb = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        gb += d;
        const auto x = in.row(i);
        for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += d * x[k];
      }
      g.bias[o] = gb;
      if (l2 != 0.0) {
        const auto w = layer.weight.row(o);
        for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += l2 * w[k];
      }
    }
    if (l == 0) break;
    Matrix next(m, layer.weight.cols());
    const Matrix& z_prev = trace.pre_activations[l - 1];
    for (std::size_t i = 0; i < m; ++i) {
      auto dn = next.row(i);
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        const auto w = layer.weight.row(o);
        for (std::size_t k = 0; k < dn.size(); ++k) dn[k] += d * w[k];
      }
      // ReLU'(0) = 0
      for (std::size_t k = 0; k < dn.size(); ++k) {
        if (!(z_prev(i, k) > 0.0)) dn[k] = 0.0;
      }
    }
    delta = std::move(next);
  }
  return grads;
}

inline double l2_penalty(const ModelParams& params, double l2) {
  double total = 0.0;
  for (const auto& l : params.layers) {
    for (double w : l.weight.values()) total += w * w;
  }
  return 0.5 * l2 * total;
}

// What a loss closure hands back: the batch objective and its gradient with
// respect to the probability matrix.
struct LossValue {
  double value = 0.0;
  Matrix grad_on_probs;
};

struct GradCheckOptions {
  double l2 = 0.0;
  // 0 checks every parameter; otherwise this many coordinates drawn
  // uniformly (with replacement) from `seed`.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
  // Leave out coordinates whose +-eps probes put some hidden pre-activation
  // on different sides of the ReLU kink; central differences are not
  // meaningful there.
  bool skip_kinks = false;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  // Where the largest error occurred.
  std::size_t worst_coordinate = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

namespace detail {

inline bool crosses_kink(const ForwardTrace& plus, const ForwardTrace& minus) {
  for (std::size_t l = 0; l + 1 < plus.pre_activations.size(); ++l) {
    const auto a = plus.pre_activations[l].values();
    const auto b = minus.pre_activations[l].values();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if ((a[k] > 0.0) != (b[k] > 0.0)) return true;
    }
  }
  return false;
}

}  // namespace detail

// Compares backward() against central differences (f(+eps) - f(-eps)) / 2eps;
// the error per parameter is |a - n| / max(|a|, |n|, 1e-8).
template <class LossFn>
GradCheckReport grad_check_report(const ModelParams& params, const Matrix& batch, LossFn&& loss, double epsilon,
                                  GradCheckOptions options = {}) {
  if (!(epsilon > 0.0)) throw DomainError("finite-difference step must be positive");
  auto objective = [&](const ForwardTrace& t, const ModelParams& p) {
    const double v = loss(t.probs).value + l2_penalty(p, options.l2);
    if (!std::isfinite(v)) throw NumericError("loss is not finite during gradient check");
    return v;
  };
  const ForwardTrace trace = forward(params, batch);
  const LossValue at = loss(trace.probs);
  if (!std::isfinite(at.value)) throw NumericError("loss is not finite during gradient check");
  const ModelParams analytic = backward(params, trace, at.grad_on_probs, options.l2);

  const std::size_t total = params.parameter_count();
  std::vector<std::size_t> coords;
  if (options.max_coordinates == 0 || options.max_coordinates >= total) {
    coords.resize(total);
    for (std::size_t k = 0; k < total; ++k) coords[k] = k;
  } else {
    Rng rng(options.seed, Stream::GradCheck);
    for (std::size_t s = 0; s < options.max_coordinates; ++s) coords.push_back(rng.uniform_index(total));
  }

  ModelParams probe = params;
  GradCheckReport report;
  for (const auto k : coords) {
    const double original = probe.at(k);
    probe.at(k) = original + epsilon;
    const ForwardTrace up = forward(probe, batch);
    const double plus = objective(up, probe);
    probe.at(k) = original - epsilon;
    const ForwardTrace down = forward(probe, batch);
    const double minus = objective(down, probe);
    probe.at(k) = original;
    if (options.skip_kinks && detail::crosses_kink(up, down)) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * epsilon);
    const double a = analytic.at(k);
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (report.checked == 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_coordinate = k;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
    ++report.checked;
  }
  return report;
}

// Largest relative error of grad_check_report.
template <class LossFn>
double grad_check(const ModelParams& params, const Matrix& batch, LossFn&& loss, double epsilon,
                  GradCheckOptions options = {}) {
  return grad_check_report(params, batch, std::forward<LossFn>(loss), epsilon, options).max_relative_error;
}

// ---- binary checkpoint --------------------------------------------------
//
// All integers are little-endian u64 except the magic and version; doubles
// are stored as their IEEE-754 bit patterns, so a round trip is bit-exact.

inline constexpr char kCheckpointMagic[8] = {'P', 'R', 'D', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::optional<Matrix> label_weights;  // n x c confidence rows, when saved with a run
  std::uint64_t epoch = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_matrix(std::ostream& out, const Matrix& m) {
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.values()) put_f64(out, v);
}

inline Matrix get_matrix(std::istream& in) {
  const auto rows = get_u64(in);
  const auto cols = get_u64(in);
  if (rows > (std::uint64_t{1} << 32) || cols > (std::uint64_t{1} << 32)) throw FormatError("implausible matrix size");
  Matrix m(rows, cols);
  for (double& v : m.values()) v = get_f64(in);
  return m;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  ckpt.params.validate();
  out.write(kCheckpointMagic, 8);
  detail::put_u64(out, kCheckpointVersion);
  detail::put_u64(out, ckpt.epoch);
  detail::put_u64(out, static_cast<std::uint64_t>(ckpt.params.arch.kind));
  detail::put_u64(out, ckpt.params.arch.hidden.size());
  for (auto h : ckpt.params.arch.hidden) detail::put_u64(out, h);
  detail::put_u64(out, ckpt.params.layers.size());
  for (const auto& layer : ckpt.params.layers) {
    detail::put_matrix(out, layer.weight);
    for (double b : layer.bias) detail::put_f64(out, b);
  }
  detail::put_u64(out, ckpt.label_weights ? 1 : 0);
  if (ckpt.label_weights) detail::put_matrix(out, *ckpt.label_weights);
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCheckpointMagic)) throw FormatError("not a checkpoint");
  const auto version = detail::get_u64(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.epoch = detail::get_u64(in);
  const auto kind = detail::get_u64(in);
  if (kind > 1) throw FormatError("unknown architecture tag");
  ckpt.params.arch.kind = static_cast<Architecture::Kind>(kind);
  const auto hidden = detail::get_u64(in);
  if (hidden > 1024) throw FormatError("implausible hidden layer count");
  for (std::uint64_t h = 0; h < hidden; ++h) ckpt.params.arch.hidden.push_back(detail::get_u64(in));
  const auto depth = detail::get_u64(in);
  if (depth != hidden + 1) throw FormatError("layer count does not match architecture");
  for (std::uint64_t l = 0; l < depth; ++l) {
    DenseLayer layer;
    layer.weight = detail::get_matrix(in);
    layer.bias.resize(layer.weight.rows());
    for (double& b : layer.bias) b = detail::get_f64(in);
    ckpt.params.layers.push_back(std::move(layer));
  }
  if (detail::get_u64(in) == 1) ckpt.label_weights = detail::get_matrix(in);
  ckpt.params.validate();
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'", Error::Category::Data);
  write_checkpoint(out, ckpt);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace proden
