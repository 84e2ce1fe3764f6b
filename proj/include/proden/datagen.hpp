#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "proden/errors.hpp"
#include "proden/label_set.hpp"
#include "proden/matrix.hpp"
#include "proden/rng.hpp"

namespace proden {

struct SupervisedDataset {
  Matrix features;                  // n x d
  std::vector<std::size_t> labels;  // n
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() != labels.size()) throw ShapeError("feature rows do not match label count");
    if (class_count <= 2) throw DomainError("multi-class data needs more than 2 classes");
    for (auto y : labels) {
      if (y >= class_count) throw DomainError("label " + std::to_string(y) + " outside class range");
    }
  }
};

enum class FlipKind { Binomial, Pair };

struct FlipSpec {
  FlipKind kind = FlipKind::Binomial;
  double q = 0.1;
  std::uint64_t seed = 0;

  friend bool operator==(const FlipSpec&, const FlipSpec&) = default;
};

inline std::string to_string(FlipKind kind) { return kind == FlipKind::Binomial ? "binomial" : "pair"; }

inline FlipKind parse_flip_kind(std::string_view s) {
  if (s == "binomial") return FlipKind::Binomial;
  if (s == "pair") return FlipKind::Pair;
  throw ConfigError("unknown flip kind '" + std::string(s) + "' (expected binomial or pair)");
}

struct PartialDataset {
  Matrix features;
  std::vector<LabelSet> candidates;
  std::optional<std::vector<std::size_t>> hidden_truth;
  std::size_t class_count = 0;
  std::optional<FlipSpec> flip;  // how the candidates were generated, if known

  std::size_t size() const noexcept { return candidates.size(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() != candidates.size()) throw ShapeError("feature rows do not match candidate count");
    if (hidden_truth && hidden_truth->size() != candidates.size()) {
      throw ShapeError("hidden truth length does not match candidate count");
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& s = candidates[i];
      if (s.class_count() != class_count) throw ShapeError("candidate mask width differs from class count");
      if (s.empty()) throw DomainError("instance " + std::to_string(i) + " has an empty candidate set");
      if (s.is_full()) throw DomainError("instance " + std::to_string(i) + " has the full label set as candidates");
      if (hidden_truth && !s.contains((*hidden_truth)[i])) {
        throw DomainError("instance " + std::to_string(i) + ": true label missing from candidate set");
      }
    }
  }
};

// Counters recorded while corrupting; `raw_flips` counts Bernoulli successes
// before the fallback and cap adjustments are applied.
struct CorruptionReport {
  std::size_t instances = 0;
  std::size_t class_count = 0;
  std::size_t raw_flips = 0;
  std::size_t fallback_count = 0;  // instances given one forced random negative
  std::size_t capped_count = 0;    // instances that flipped every negative and lost one

  double raw_inclusion_frequency() const {
    const auto trials = static_cast<double>(instances) * static_cast<double>(class_count - 1);
    return trials > 0 ? static_cast<double>(raw_flips) / trials : 0.0;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::size_t infer_class_count(const std::vector<std::size_t>& labels) {
  std::size_t c = 0;
  for (auto y : labels) c = std::max(c, y + 1);
  return c;
}

}  // namespace detail

struct CsvOptions {
  int label_column = -1;  // negative counts from the end
  bool skip_header = false;
};

// Parses comma-separated rows of numeric features plus one integer label
// column. The class count is the largest label plus one.
inline SupervisedDataset parse_csv(std::istream& in, CsvOptions options = {}) {
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t arity = 0;
  std::size_t row_number = 0;
  std::string line;
  bool header_pending = options.skip_header;
  while (std::getline(in, line)) {
    ++row_number;
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (arity == 0) {
      arity = fields.size();
      if (arity < 2) throw ParseError("need at least one feature column and a label column", row_number);
    } else if (fields.size() != arity) {
      throw ParseError("expected " + std::to_string(arity) + " fields, found " + std::to_string(fields.size()),
                       row_number);
    }
    const long long col = options.label_column < 0 ? static_cast<long long>(arity) + options.label_column
                                                   : options.label_column;
    if (col < 0 || col >= static_cast<long long>(arity)) throw ParseError("label column out of range", row_number);
    for (std::size_t f = 0; f < arity; ++f) {
      if (static_cast<long long>(f) == col) {
        const auto label = detail::parse_integer(fields[f]);
        if (!label || *label < 0) throw LabelTypeError(std::string(fields[f]), row_number);
        labels.push_back(static_cast<std::size_t>(*label));
      } else {
        const auto v = detail::parse_double(fields[f]);
        if (!v) throw ParseError("malformed number '" + std::string(fields[f]) + "'", row_number);
        values.push_back(*v);
      }
    }
  }
  if (labels.empty()) throw ParseError("no data rows");
  SupervisedDataset data;
  data.features = Matrix(labels.size(), arity - 1, std::move(values));
  data.labels = std::move(labels);
  data.class_count = detail::infer_class_count(data.labels);
  return data;
}

inline SupervisedDataset load_csv(const std::string& path, CsvOptions options = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in, options);
}

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) throw FormatError("'" + path + "' is truncated in its header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads an IDX3 image file and its IDX1 label file. Pixels are flattened
// row-major and scaled to [0, 1].
inline SupervisedDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = detail::read_file_bytes(images_path);
  const auto label_bytes = detail::read_file_bytes(labels_path);

  const auto image_magic = detail::read_be32(images, 0, images_path);
  if (image_magic != kIdxImageMagic) throw FormatError("'" + images_path + "' is not an IDX3 ubyte image file");
  const auto label_magic = detail::read_be32(label_bytes, 0, labels_path);
  if (label_magic != kIdxLabelMagic) throw FormatError("'" + labels_path + "' is not an IDX1 ubyte label file");

  const std::size_t count = detail::read_be32(images, 4, images_path);
  const std::size_t rows = detail::read_be32(images, 8, images_path);
  const std::size_t cols = detail::read_be32(images, 12, images_path);
  const std::size_t label_count = detail::read_be32(label_bytes, 4, labels_path);
  if (count != label_count) {
    throw ConsistencyError("image count " + std::to_string(count) + " differs from label count " +
                           std::to_string(label_count));
  }
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + count * dim) throw FormatError("'" + images_path + "' is truncated");
  if (label_bytes.size() < 8 + count) throw FormatError("'" + labels_path + "' is truncated");

  SupervisedDataset data;
  data.features = Matrix(count, dim);
  auto values = data.features.values();
  for (std::size_t i = 0; i < count * dim; ++i) values[i] = static_cast<double>(images[16 + i]) / 255.0;
  data.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) data.labels[i] = label_bytes[8 + i];
  data.class_count = detail::infer_class_count(data.labels);
  return data;
}

// Column-wise z-scores with the population standard deviation. Constant
// columns become all zeros.
inline SupervisedDataset zscore_normalize(SupervisedDataset data) {
  const std::size_t n = data.size();
  if (n < 2) throw InsufficientDataError("z-score normalization needs at least 2 rows");
  auto& x = data.features;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, f) - mean) * (x(i, f) - mean);
    const double stddev = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) x(i, f) = stddev > 0.0 ? (x(i, f) - mean) / stddev : 0.0;
  }
  return data;
}

namespace detail {

inline void check_flip(const FlipSpec& spec, FlipKind expected) {
  if (spec.kind != expected) throw DomainError("flip spec kind does not match the corruption routine");
  if (!(spec.q >= 0.0 && spec.q < 1.0)) throw DomainError("flip probability q must lie in [0, 1)");
}

}  // namespace detail

// Binomial flipping: every negative label joins the candidate set
// independently with probability q. An instance that flipped nothing gets
// one uniformly random negative; an instance that flipped every negative
// drops one uniformly random negative so the set stays a proper subset.
inline PartialDataset corrupt_binomial(const SupervisedDataset& data, const FlipSpec& spec,
                                       CorruptionReport* report = nullptr) {
  detail::check_flip(spec, FlipKind::Binomial);
  data.validate();
  const std::size_t c = data.class_count;
  Rng rng(spec.seed, Stream::Corruption);
  CorruptionReport stats{data.size(), c, 0, 0, 0};

  PartialDataset out;
  out.features = data.features;
  out.class_count = c;
  out.hidden_truth = data.labels;
  out.flip = spec;
  out.candidates.reserve(data.size());
  for (const auto y : data.labels) {
    LabelSet s = LabelSet::singleton(c, y);
    std::size_t flipped = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j != y && rng.bernoulli(spec.q)) {
        s.insert(j);
        ++flipped;
      }
    }
    stats.raw_flips += flipped;
    // k-th negative in label order, skipping the true label
    auto nth_negative = [&](std::size_t k) { return k < y ? k : k + 1; };
    if (flipped == 0) {
      s.insert(nth_negative(static_cast<std::size_t>(rng.uniform_index(c - 1))));
      ++stats.fallback_count;
    } else if (flipped == c - 1) {
      s.erase(nth_negative(static_cast<std::size_t>(rng.uniform_index(c - 1))));
      ++stats.capped_count;
    }
    out.candidates.push_back(std::move(s));
  }
  if (report) *report = stats;
  return out;
}

// Pair flipping: the cyclic neighbour (y + 1) mod c joins with probability q.
inline PartialDataset corrupt_pair(const SupervisedDataset& data, const FlipSpec& spec,
                                   CorruptionReport* report = nullptr) {
  detail::check_flip(spec, FlipKind::Pair);
  data.validate();
  const std::size_t c = data.class_count;
  Rng rng(spec.seed, Stream::Corruption);
  CorruptionReport stats{data.size(), c, 0, 0, 0};

  PartialDataset out;
  out.features = data.features;
  out.class_count = c;
  out.hidden_truth = data.labels;
  out.flip = spec;
  out.candidates.reserve(data.size());
  for (const auto y : data.labels) {
    LabelSet s = LabelSet::singleton(c, y);
    if (rng.bernoulli(spec.q)) {
      s.insert((y + 1) % c);
      ++stats.raw_flips;
    }
    out.candidates.push_back(std::move(s));
  }
  if (report) *report = stats;
  return out;
}

inline PartialDataset corrupt(const SupervisedDataset& data, const FlipSpec& spec,
                              CorruptionReport* report = nullptr) {
  return spec.kind == FlipKind::Binomial ? corrupt_binomial(data, spec, report) : corrupt_pair(data, spec, report);
}

// Nominal inclusion probabilities: entry (y, j) is Pr[j in S | true label y].
inline Matrix flip_matrix(FlipKind kind, double q, std::size_t c) {
  Matrix m(c, c);
  for (std::size_t y = 0; y < c; ++y) {
    m(y, y) = 1.0;
    if (kind == FlipKind::Binomial) {
      for (std::size_t j = 0; j < c; ++j) {
        if (j != y) m(y, j) = q;
      }
    } else {
      m(y, (y + 1) % c) = q;
    }
  }
  return m;
}

// Observed counterpart of flip_matrix: entry (y, j) is the fraction of
// instances with true label y whose candidate set contains j.
inline Matrix empirical_flip_matrix(const PartialDataset& data) {
  if (!data.hidden_truth) throw MissingTruthError("empirical flip matrix needs hidden true labels");
  const std::size_t c = data.class_count;
  Matrix counts(c, c);
  std::vector<double> per_class(c, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto y = (*data.hidden_truth)[i];
    per_class[y] += 1.0;
    data.candidates[i].for_each([&](std::size_t j) { counts(y, j) += 1.0; });
  }
  for (std::size_t y = 0; y < c; ++y) {
    if (per_class[y] == 0.0) continue;
    for (std::size_t j = 0; j < c; ++j) counts(y, j) /= per_class[y];
  }
  return counts;
}

// Empirical ambiguity degree: the largest co-occurrence frequency of a wrong
// label with a true label. Classes without instances are skipped.
inline double estimate_ambiguity(const PartialDataset& data) {
  const Matrix freq = empirical_flip_matrix(data);
  std::vector<bool> present(data.class_count, false);
  for (auto y : *data.hidden_truth) present[y] = true;
  double gamma = 0.0;
  for (std::size_t y = 0; y < data.class_count; ++y) {
    if (!present[y]) continue;
    for (std::size_t j = 0; j < data.class_count; ++j) {
      if (j != y) gamma = std::max(gamma, freq(y, j));
    }
  }
  return gamma;
}

inline double mean_candidate_size(const PartialDataset& data) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  for (const auto& s : data.candidates) total += static_cast<double>(s.size());
  return total / static_cast<double>(data.size());
}

// Shuffles [0, n) and cuts it into ceil(n / batch_size) contiguous chunks.
inline std::vector<std::vector<std::size_t>> split_minibatches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw DomainError("batch size must be at least 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

inline std::vector<std::vector<std::size_t>> split_minibatches(std::size_t n, std::size_t batch_size,
                                                               std::uint64_t seed) {
  Rng rng(seed, Stream::Shuffle);
  return split_minibatches(n, batch_size, rng);
}

inline SupervisedDataset subset(const SupervisedDataset& data, std::span<const std::size_t> indices) {
  SupervisedDataset out;
  out.features = data.features.gather_rows(indices);
  out.class_count = data.class_count;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(data.labels[i]);
  return out;
}

struct TrainTestSplit {
  SupervisedDataset train;
  SupervisedDataset test;
};

// Stratified split. The train side gets floor((1 - test_fraction) * n)
// rows; test rows are spread over classes by largest remainder of
// test_fraction * n_k. Both sides keep the original row order.
inline TrainTestSplit stratified_split(const SupervisedDataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  const std::size_t c = data.class_count;
  const auto train_total = static_cast<std::size_t>(std::floor((1.0 - test_fraction) * static_cast<double>(n)));
  const std::size_t test_total = n - train_total;

  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);

  std::vector<std::size_t> quota(c);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double ideal = test_fraction * static_cast<double>(by_class[k].size());
    quota[k] = static_cast<std::size_t>(std::floor(ideal));
    assigned += quota[k];
    remainders.emplace_back(ideal - std::floor(ideal), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < test_total && r < remainders.size(); ++r) {
    const auto k = remainders[r].second;
    if (quota[k] < by_class[k].size()) {
      ++quota[k];
      ++assigned;
    }
  }

  Rng rng(seed, Stream::Split);
  std::vector<bool> is_test(n, false);
  for (std::size_t k = 0; k < c; ++k) {
    auto members = by_class[k];
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t t = 0; t < quota[k]; ++t) is_test[members[t]] = true;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
  return {subset(data, train_idx), subset(data, test_idx)};
}

// Isotropic Gaussian blobs in `dim` dimensions. Centres sit on a circle in
// the first two coordinates with adjacent centres `spacing` apart; labels
// cycle 0, 1, ..., c - 1.
inline SupervisedDataset gaussian_clusters(std::size_t n, std::size_t c, double sigma, double spacing,
                                           std::uint64_t seed, std::size_t dim = 2) {
  if (dim < 2) throw DomainError("cluster data needs at least 2 dimensions");
  const double radius = spacing / (2.0 * std::sin(std::numbers::pi / static_cast<double>(c)));
  Rng rng(seed, Stream::Synthetic);
  SupervisedDataset data;
  data.features = Matrix(n, dim);
  data.labels.resize(n);
  data.class_count = c;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % c;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(y) / static_cast<double>(c);
    data.labels[i] = y;
    for (std::size_t f = 0; f < dim; ++f) {
      const double centre = f == 0 ? radius * std::cos(angle) : f == 1 ? radius * std::sin(angle) : 0.0;
      data.features(i, f) = rng.normal(centre, sigma);
    }
  }
  return data;
}

// ---- partial dataset container ----------------------------------------
//
//   proden-partial 1
//   n <n> d <d> c <c> truth <0|1>
//   flip <none|binomial|pair> <q> <seed>
//   <mask words as hex joined by ':'> <truth or -> <feature> ...   (n lines)
//
// Doubles use shortest round-trip formatting, so a save/load cycle is exact.

inline constexpr int kPartialFormatVersion = 1;

inline void write_partial(std::ostream& out, const PartialDataset& data) {
  data.validate();
  out << "proden-partial " << kPartialFormatVersion << '\n';
  out << "n " << data.size() << " d " << data.feature_dim() << " c " << data.class_count << " truth "
      << (data.hidden_truth ? 1 : 0) << '\n';
  if (data.flip) {
    out << "flip " << to_string(data.flip->kind) << ' ' << detail::format_double(data.flip->q) << ' '
        << data.flip->seed << '\n';
  } else {
    out << "flip none 0 0\n";
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto words = data.candidates[i].words();
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) out << ':';
      std::array<char, 20> buf{};
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), words[w], 16);
      out << std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
    }
    out << ' ';
    if (data.hidden_truth) {
      out << (*data.hidden_truth)[i];
    } else {
      out << '-';
    }
    for (double v : data.features.row(i)) out << ' ' << detail::format_double(v);
    out << '\n';
  }
}

inline PartialDataset read_partial(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "proden-partial") throw FormatError("not a partial dataset container");
  if (version != kPartialFormatVersion) throw FormatError("unsupported container version " + std::to_string(version));
  std::string kn, kd, kc, kt, kf, flip_kind, q_token;
  std::size_t n = 0, d = 0, c = 0;
  int has_truth = 0;
  std::uint64_t flip_seed = 0;
  if (!(in >> kn >> n >> kd >> d >> kc >> c >> kt >> has_truth) || kn != "n" || kd != "d" || kc != "c" ||
      kt != "truth") {
    throw FormatError("malformed container header");
  }
  if (!(in >> kf >> flip_kind >> q_token >> flip_seed) || kf != "flip") throw FormatError("malformed flip line");

  PartialDataset data;
  data.class_count = c;
  data.features = Matrix(n, d);
  data.candidates.reserve(n);
  if (flip_kind != "none") {
    const auto q = detail::parse_double(q_token);
    if (!q) throw FormatError("malformed flip probability");
    data.flip = FlipSpec{parse_flip_kind(flip_kind), *q, flip_seed};
  }
  if (has_truth) data.hidden_truth.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string mask, truth;
    if (!(in >> mask >> truth)) throw FormatError("container truncated at instance " + std::to_string(i));
    std::vector<std::uint64_t> words;
    for (auto part : detail::split(mask, ':')) {
      std::uint64_t w = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), w, 16);
      if (ec != std::errc{} || ptr != part.data() + part.size()) throw FormatError("malformed candidate mask");
      words.push_back(w);
    }
    data.candidates.push_back(LabelSet::from_words(c, std::move(words)));
    if (has_truth) {
      const auto t = detail::parse_integer(truth);
      if (!t || *t < 0) throw FormatError("malformed hidden label");
      (*data.hidden_truth)[i] = static_cast<std::size_t>(*t);
    }
    for (std::size_t f = 0; f < d; ++f) {
      std::string token;
      if (!(in >> token)) throw FormatError("container truncated at instance " + std::to_string(i));
      const auto v = detail::parse_double(token);
      if (!v) throw FormatError("malformed feature value");
      data.features(i, f) = *v;
    }
  }
  data.validate();
  return data;
}

inline void save_partial(const std::string& path, const PartialDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'", Error::Category::Data);
  write_partial(out, data);
}

inline PartialDataset load_partial(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_partial(in);
}

}  // namespace proden
