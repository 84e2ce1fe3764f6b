#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "proden/datagen.hpp"
#include "test_util.hpp"

using namespace proden;

namespace {

SupervisedDataset parse(const std::string& text, CsvOptions opts = {}) {
  std::istringstream in(text);
  return parse_csv(in, opts);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::string& path, std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                      std::uint32_t cols, const std::vector<unsigned char>& pixels) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, std::uint32_t count, const std::vector<unsigned char>& labels) {
  std::ofstream out(path, std::ios::binary);
  put_be32(out, kIdxLabelMagic);
  put_be32(out, count);
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace

// ---- csv ----

TEST(Csv, ThreeRowsTwoFeatures) {
  const auto d = parse("1.0,2.0,0\n3.5,-1,2\n0,0,1\n");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.feature_dim(), 2u);
  EXPECT_EQ(d.class_count, 3u);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_DOUBLE_EQ(d.features(1, 0), 3.5);
  EXPECT_DOUBLE_EQ(d.features(1, 1), -1.0);
}

TEST(Csv, EmptyInputIsParseError) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("\n\n"), ParseError);
}

TEST(Csv, RaggedRowReportsRowNumber) {
  try {
    parse("1,2,0\n1,2,3,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(Csv, NonIntegerLabelIsTyped) {
  EXPECT_THROW(parse("1,2,0\n1,2,1.5\n"), LabelTypeError);
  EXPECT_THROW(parse("1,2,cat\n"), LabelTypeError);
  EXPECT_THROW(parse("1,2,-1\n"), LabelTypeError);
}

TEST(Csv, MalformedFeature) { EXPECT_THROW(parse("1,x,0\n"), ParseError); }

TEST(Csv, HeaderAndLabelColumn) {
  const auto d = parse("label,a,b\n2,0.5,0.25\n0,1,1\n", {0, true});
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{2, 0}));
  EXPECT_DOUBLE_EQ(d.features(0, 1), 0.25);
}

TEST(Csv, LabelColumnOutOfRange) { EXPECT_THROW(parse("1,2,0\n", {5, false}), ParseError); }

TEST(Csv, MissingFile) { EXPECT_THROW(load_csv("/nonexistent/file.csv"), ParseError); }

TEST(Csv, YeastShapeAndSplit) {
  const auto d = load_csv(std::string(PRODEN_DATA_DIR) + "/yeast.csv");
  EXPECT_EQ(d.size(), 1484u);
  EXPECT_EQ(d.feature_dim(), 8u);
  EXPECT_EQ(d.class_count, 10u);
  const auto split = stratified_split(d, 0.1, 1);
  EXPECT_EQ(split.train.size(), 1335u);
  EXPECT_EQ(split.test.size(), 149u);
}

// ---- idx ----

TEST(Idx, SingleZeroImage) {
  const auto dir = testutil::temp_dir("idx_zero");
  write_idx_images((dir / "img").string(), kIdxImageMagic, 1, 2, 3, std::vector<unsigned char>(6, 0));
  write_idx_labels((dir / "lbl").string(), 1, {4});
  const auto d = load_idx((dir / "img").string(), (dir / "lbl").string());
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.feature_dim(), 6u);
  for (double v : d.features.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(d.labels[0], 4u);
}

TEST(Idx, PixelsScaledRowMajor) {
  const auto dir = testutil::temp_dir("idx_scale");
  write_idx_images((dir / "img").string(), kIdxImageMagic, 2, 1, 2, {0, 255, 51, 102});
  write_idx_labels((dir / "lbl").string(), 2, {0, 1});
  const auto d = load_idx((dir / "img").string(), (dir / "lbl").string());
  EXPECT_DOUBLE_EQ(d.features(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.features(1, 0), 0.2);
  EXPECT_DOUBLE_EQ(d.features(1, 1), 0.4);
}

TEST(Idx, TruncatedImageFile) {
  const auto dir = testutil::temp_dir("idx_trunc");
  write_idx_images((dir / "img").string(), kIdxImageMagic, 2, 2, 2, {1, 2, 3});
  write_idx_labels((dir / "lbl").string(), 2, {0, 1});
  EXPECT_THROW(load_idx((dir / "img").string(), (dir / "lbl").string()), FormatError);
  std::ofstream((dir / "short").string(), std::ios::binary) << "ab";
  EXPECT_THROW(load_idx((dir / "short").string(), (dir / "lbl").string()), FormatError);
}

TEST(Idx, WrongMagic) {
  const auto dir = testutil::temp_dir("idx_magic");
  write_idx_images((dir / "img").string(), 0x0801, 1, 1, 1, {0});
  write_idx_labels((dir / "lbl").string(), 1, {0});
  EXPECT_THROW(load_idx((dir / "img").string(), (dir / "lbl").string()), FormatError);
}

TEST(Idx, CountMismatch) {
  const auto dir = testutil::temp_dir("idx_count");
  write_idx_images((dir / "img").string(), kIdxImageMagic, 2, 1, 1, {0, 0});
  write_idx_labels((dir / "lbl").string(), 3, {0, 1, 2});
  EXPECT_THROW(load_idx((dir / "img").string(), (dir / "lbl").string()), ConsistencyError);
}

// ---- zscore ----

TEST(ZScore, TwoPointColumn) {
  const auto d = zscore_normalize(parse("1,5,0\n3,5,1\n"));
  EXPECT_DOUBLE_EQ(d.features(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(d.features(1, 0), 1.0);
  EXPECT_EQ(d.features(0, 1), 0.0);
  EXPECT_EQ(d.features(1, 1), 0.0);
}

TEST(ZScore, ConstantColumnBecomesZero) {
  const auto d = zscore_normalize(parse("5,0\n5,1\n5,2\n"));
  for (double v : d.features.values()) EXPECT_EQ(v, 0.0);
}

TEST(ZScore, MomentsAndIdempotence) {
  auto& g = testutil::gen();
  std::normal_distribution<double> nd(3.0, 7.0);
  SupervisedDataset d;
  d.class_count = 3;
  d.features = Matrix(200, 4);
  for (auto& v : d.features.values()) v = nd(g);
  d.labels.assign(200, 0);
  const auto once = zscore_normalize(d);
  for (std::size_t f = 0; f < 4; ++f) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < 200; ++i) m += once.features(i, f);
    m /= 200.0;
    for (std::size_t i = 0; i < 200; ++i) s += (once.features(i, f) - m) * (once.features(i, f) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(s / 200.0), 1.0, 1e-12);
  }
  const auto twice = zscore_normalize(once);
  for (std::size_t k = 0; k < once.features.size(); ++k) {
    EXPECT_NEAR(twice.features.values()[k], once.features.values()[k], 1e-12);
  }
}

TEST(ZScore, NeedsTwoRows) { EXPECT_THROW(zscore_normalize(parse("1,0\n")), InsufficientDataError); }

// ---- corruption ----

TEST(Binomial, ZeroQGivesPairs) {
  const auto data = testutil::balanced(100, 10);
  CorruptionReport report;
  const auto p = corrupt_binomial(data, {FlipKind::Binomial, 0.0, 3}, &report);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p.candidates[i].size(), 2u);
    EXPECT_TRUE(p.candidates[i].contains(data.labels[i]));
  }
  EXPECT_EQ(report.raw_flips, 0u);
  EXPECT_EQ(report.fallback_count, p.size());
}

TEST(Binomial, ValidityAcrossSettings) {
  for (std::size_t c : {3, 4, 10, 70}) {
    for (double q : {0.0, 0.1, 0.5, 0.9, 0.999}) {
      const auto data = testutil::balanced(40, c);
      const auto p = corrupt_binomial(data, {FlipKind::Binomial, q, 11});
      ASSERT_NO_THROW(p.validate());
      ASSERT_EQ(*p.hidden_truth, data.labels);
      for (std::size_t i = 0; i < p.size(); ++i) {
        ASSERT_TRUE(p.candidates[i].contains(data.labels[i]));
        ASSERT_GE(p.candidates[i].size(), 2u);
        ASSERT_FALSE(p.candidates[i].is_full());
      }
    }
  }
}

TEST(Binomial, CapKeepsSetsProper) {
  CorruptionReport report;
  const auto p = corrupt_binomial(testutil::balanced(200, 3), {FlipKind::Binomial, 0.95, 5}, &report);
  EXPECT_GT(report.capped_count, 0u);
  for (const auto& s : p.candidates) EXPECT_EQ(s.size(), 2u);
}

TEST(Binomial, RawInclusionFrequencyNearQ) {
  for (double q : {0.1, 0.7}) {
    CorruptionReport report;
    corrupt_binomial(testutil::balanced(1000, 10), {FlipKind::Binomial, q, 21}, &report);
    EXPECT_NEAR(report.raw_inclusion_frequency(), q, 0.01);
  }
}

TEST(Binomial, MeanCandidateSizeMatchesExpectation) {
  // 1 (truth) + (c-1) q raw flips + P(no flip) forced distractor - P(all flip) capped
  const std::size_t c = 10;
  for (double q : {0.1, 0.5}) {
    const double expected = 1.0 + (c - 1) * q + std::pow(1 - q, c - 1) - std::pow(q, c - 1);
    const auto p = corrupt_binomial(testutil::balanced(3000, c), {FlipKind::Binomial, q, 8});
    EXPECT_NEAR(mean_candidate_size(p), expected, 0.02) << "q=" << q;
  }
}

TEST(Binomial, AmbiguityIncludesFallbackMass) {
  // A fixed negative appears with probability q + (1-q)^(c-1)/(c-1), minus a
  // negligible cap term.
  const std::size_t c = 10;
  const double q = 0.1;
  const double per_pair = q + std::pow(1 - q, c - 1) / (c - 1);
  const auto p = corrupt_binomial(testutil::balanced(10000, c), {FlipKind::Binomial, q, 9});
  const double gamma = estimate_ambiguity(p);
  EXPECT_GT(gamma, per_pair - 0.005);
  EXPECT_LT(gamma, per_pair + 0.02);
}

TEST(Binomial, DeterministicPerSeed) {
  const auto data = testutil::balanced(300, 10);
  const auto a = corrupt_binomial(data, {FlipKind::Binomial, 0.3, 42});
  const auto b = corrupt_binomial(data, {FlipKind::Binomial, 0.3, 42});
  const auto c = corrupt_binomial(data, {FlipKind::Binomial, 0.3, 43});
  EXPECT_EQ(a.candidates, b.candidates);
  EXPECT_NE(a.candidates, c.candidates);
}

TEST(Binomial, RejectsBadSpec) {
  const auto data = testutil::balanced(5, 4);
  EXPECT_THROW(corrupt_binomial(data, {FlipKind::Binomial, 1.0, 0}), DomainError);
  EXPECT_THROW(corrupt_binomial(data, {FlipKind::Binomial, -0.1, 0}), DomainError);
  EXPECT_THROW(corrupt_binomial(data, {FlipKind::Pair, 0.1, 0}), DomainError);
  EXPECT_THROW(corrupt_binomial(data, {FlipKind::Binomial, std::nan(""), 0}), DomainError);
}

TEST(Pair, ZeroQGivesSingletons) {
  const auto p = corrupt_pair(testutil::balanced(50, 5), {FlipKind::Pair, 0.0, 1});
  for (const auto& s : p.candidates) EXPECT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(mean_candidate_size(p), 1.0);
  EXPECT_EQ(estimate_ambiguity(p), 0.0);
}

TEST(Pair, PartnerIsCyclicSuccessor) {
  const std::size_t c = 6;
  const auto p = corrupt_pair(testutil::balanced(200, c), {FlipKind::Pair, 0.5, 2});
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto y = (*p.hidden_truth)[i];
    if (p.candidates[i].size() == 2) {
      EXPECT_TRUE(p.candidates[i].contains((y + 1) % c));
    }
  }
}

TEST(Pair, TwoLabelFractionAndMeanSize) {
  const auto p9 = corrupt_pair(testutil::balanced(1000, 10), {FlipKind::Pair, 0.9, 3});
  const double two = mean_candidate_size(p9) - 1.0;
  EXPECT_GE(two, 0.89);
  EXPECT_LE(two, 0.91);
  const auto p5 = corrupt_pair(testutil::balanced(1000, 10), {FlipKind::Pair, 0.5, 3});
  EXPECT_NEAR(mean_candidate_size(p5), 1.5, 0.02);
}

TEST(Pair, AmbiguityConvergesToQ) {
  for (double q : {0.5, 0.7, 0.8, 0.9}) {
    const auto p = corrupt_pair(testutil::balanced(10000, 10), {FlipKind::Pair, q, 17});
    EXPECT_LT(std::abs(estimate_ambiguity(p) - q), 0.03) << "q=" << q;
  }
}

TEST(FlipMatrix, NominalShapes) {
  const auto b = flip_matrix(FlipKind::Binomial, 0.1, 10);
  const auto p = flip_matrix(FlipKind::Pair, 0.5, 10);
  for (std::size_t y = 0; y < 10; ++y) {
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_DOUBLE_EQ(b(y, j), y == j ? 1.0 : 0.1);
      EXPECT_DOUBLE_EQ(p(y, j), y == j ? 1.0 : j == (y + 1) % 10 ? 0.5 : 0.0);
    }
  }
  EXPECT_DOUBLE_EQ(p(9, 0), 0.5);
}

TEST(FlipMatrix, EmpiricalTracksNominalForPair) {
  const auto p = corrupt_pair(testutil::balanced(5000, 4), {FlipKind::Pair, 0.3, 4});
  const auto emp = empirical_flip_matrix(p);
  const auto nom = flip_matrix(FlipKind::Pair, 0.3, 4);
  for (std::size_t k = 0; k < emp.size(); ++k) EXPECT_NEAR(emp.values()[k], nom.values()[k], 0.025);
}

TEST(Ambiguity, NeedsTruth) {
  auto p = corrupt_pair(testutil::balanced(10, 4), {FlipKind::Pair, 0.5, 1});
  p.hidden_truth.reset();
  EXPECT_THROW(estimate_ambiguity(p), MissingTruthError);
}

TEST(Ambiguity, SkipsAbsentClasses) {
  PartialDataset p;
  p.class_count = 4;
  p.features = Matrix(2, 1);
  p.candidates = {LabelSet::of(4, {0, 1}), LabelSet::of(4, {0})};
  p.hidden_truth = std::vector<std::size_t>{0, 0};
  EXPECT_DOUBLE_EQ(estimate_ambiguity(p), 0.5);
}

// ---- partial dataset validity ----

TEST(PartialDataset, ValidateCatchesViolations) {
  PartialDataset p;
  p.class_count = 3;
  p.features = Matrix(1, 1);
  p.candidates = {LabelSet::of(3, {0, 1, 2})};
  EXPECT_THROW(p.validate(), DomainError);
  p.candidates = {LabelSet(3)};
  EXPECT_THROW(p.validate(), DomainError);
  p.candidates = {LabelSet::of(3, {1})};
  p.hidden_truth = std::vector<std::size_t>{0};
  EXPECT_THROW(p.validate(), Error);
  p.hidden_truth = std::vector<std::size_t>{1};
  EXPECT_NO_THROW(p.validate());
}

// ---- minibatches ----

TEST(Minibatches, PartitionSizes) {
  const auto b = split_minibatches(5, 2, std::uint64_t{1});
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 2u);
  EXPECT_EQ(b[1].size(), 2u);
  EXPECT_EQ(b[2].size(), 1u);
  std::vector<std::size_t> all;
  for (const auto& x : b) all.insert(all.end(), x.begin(), x.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Minibatches, SingleBatchWhenLarge) {
  const auto b = split_minibatches(7, 100, std::uint64_t{2});
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 7u);
}

TEST(Minibatches, DeterministicAndSeedSensitive) {
  EXPECT_EQ(split_minibatches(100, 8, std::uint64_t{3}), split_minibatches(100, 8, std::uint64_t{3}));
  EXPECT_NE(split_minibatches(100, 8, std::uint64_t{3}), split_minibatches(100, 8, std::uint64_t{4}));
}

TEST(Minibatches, ZeroBatchSize) { EXPECT_THROW(split_minibatches(5, 0, std::uint64_t{1}), DomainError); }

// ---- splitting and synthetic data ----

TEST(Split, StratifiedAndOrderPreserving) {
  auto data = testutil::balanced(30, 4);
  for (std::size_t i = 0; i < data.size(); ++i) data.features(i, 0) = static_cast<double>(i);
  const auto s = stratified_split(data, 0.2, 5);
  EXPECT_EQ(s.train.size(), 96u);
  EXPECT_EQ(s.test.size(), 24u);
  std::vector<int> per_class(4, 0);
  for (auto y : s.test.labels) ++per_class[y];
  for (int n : per_class) EXPECT_EQ(n, 6);
  for (std::size_t i = 1; i < s.train.size(); ++i) EXPECT_LT(s.train.features(i - 1, 0), s.train.features(i, 0));
  EXPECT_THROW(stratified_split(data, 0.0, 1), DomainError);
  EXPECT_THROW(stratified_split(data, 1.0, 1), DomainError);
}

TEST(Synthetic, ClusterGeometry) {
  const auto d = gaussian_clusters(3000, 3, 0.3, 4.0, 7);
  EXPECT_EQ(d.class_count, 3u);
  std::vector<std::array<double, 2>> mean(3, {0.0, 0.0});
  for (std::size_t i = 0; i < d.size(); ++i) {
    mean[d.labels[i]][0] += d.features(i, 0) / 1000.0;
    mean[d.labels[i]][1] += d.features(i, 1) / 1000.0;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& u = mean[a];
    const auto& v = mean[(a + 1) % 3];
    EXPECT_NEAR(std::hypot(u[0] - v[0], u[1] - v[1]), 4.0, 0.05);
  }
  EXPECT_EQ(d.features, gaussian_clusters(3000, 3, 0.3, 4.0, 7).features);
}

// ---- container ----

TEST(Container, RoundTripIsExact) {
  auto data = gaussian_clusters(50, 70, 0.7, 1.0, 3, 3);
  const auto p = corrupt_binomial(data, {FlipKind::Binomial, 0.2, 9});
  std::stringstream buf;
  write_partial(buf, p);
  const auto back = read_partial(buf);
  EXPECT_EQ(back.features, p.features);
  EXPECT_EQ(back.candidates, p.candidates);
  EXPECT_EQ(back.hidden_truth, p.hidden_truth);
  EXPECT_EQ(back.class_count, p.class_count);
  ASSERT_TRUE(back.flip.has_value());
  EXPECT_EQ(back.flip->q, 0.2);
  EXPECT_EQ(back.flip->seed, 9u);
}

TEST(Container, WithoutTruth) {
  auto p = corrupt_pair(testutil::balanced(5, 3), {FlipKind::Pair, 0.5, 1});
  p.hidden_truth.reset();
  p.flip.reset();
  std::stringstream buf;
  write_partial(buf, p);
  const auto back = read_partial(buf);
  EXPECT_FALSE(back.hidden_truth.has_value());
  EXPECT_FALSE(back.flip.has_value());
  EXPECT_EQ(back.candidates, p.candidates);
}

TEST(Container, RejectsGarbage) {
  std::istringstream a("hello 1\n");
  EXPECT_THROW(read_partial(a), FormatError);
  std::istringstream b("proden-partial 9\n");
  EXPECT_THROW(read_partial(b), FormatError);
  std::istringstream c("proden-partial 1\nn 2 d 1 c 3 truth 1\nflip none 0 0\n3 0 1.5\n");
  EXPECT_THROW(read_partial(c), FormatError);
  std::istringstream d("proden-partial 1\nn 1 d 1 c 3 truth 1\nflip none 0 0\nzz 0 1.5\n");
  EXPECT_THROW(read_partial(d), FormatError);
}
