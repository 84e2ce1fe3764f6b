#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "proden/config.hpp"
#include "proden/datagen.hpp"
#include "proden/evaluation.hpp"
#include "proden/metrics.hpp"
#include "proden/netcore.hpp"
#include "proden/trainer.hpp"

namespace proden {

namespace fs = std::filesystem;

enum class DataFormat { Csv, Idx, Synthetic, Partial };

inline DataFormat parse_data_format(std::string_view s) {
  if (s == "csv") return DataFormat::Csv;
  if (s == "idx") return DataFormat::Idx;
  if (s == "synthetic") return DataFormat::Synthetic;
  if (s == "partial") return DataFormat::Partial;
  throw ConfigError("unknown data format '" + std::string(s) + "' (expected csv, idx, synthetic or partial)");
}

inline std::string to_string(DataFormat f) {
  switch (f) {
    case DataFormat::Csv: return "csv";
    case DataFormat::Idx: return "idx";
    case DataFormat::Synthetic: return "synthetic";
    case DataFormat::Partial: return "partial";
  }
  return "?";
}

struct DataSpec {
  DataFormat format = DataFormat::Csv;
  std::string path;        // csv file, or partial container
  std::string test_path;   // optional explicit test csv
  int label_column = -1;
  bool skip_header = false;
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t max_train = 0;  // 0 keeps every training row
  // synthetic Gaussian clusters
  std::size_t synthetic_train = 3000;
  std::size_t synthetic_test = 1000;
  std::size_t synthetic_classes = 3;
  double synthetic_sigma = 0.3;
  double synthetic_spacing = 4.0;
  // preprocessing
  bool zscore = true;
  double test_fraction = 0.1;
  std::optional<std::uint64_t> split_seed;  // defaults to the run seed
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataSpec data;
  FlipSpec flip;  // seed is replaced by the run seed
  Architecture arch = Architecture::linear();
  TrainConfig train;
  fs::path out_dir = "runs";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int jobs = 1;
  int checkpoint_every = 0;  // 0 writes only the final checkpoint

  void validate() const {
    train.validate();
    if (!(flip.q >= 0.0 && flip.q < 1.0)) throw ConfigError("corruption.q must lie in [0, 1)");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (jobs < 1) throw ConfigError("run.jobs must be at least 1");
    if (checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be nonnegative");
    switch (data.format) {
      case DataFormat::Csv:
      case DataFormat::Partial:
        if (data.path.empty()) throw ConfigError("data.path is required for " + to_string(data.format) + " data");
        if (!fs::exists(data.path)) throw ConfigError("data.path '" + data.path + "' does not exist");
        break;
      case DataFormat::Idx:
        for (const auto* p : {&data.train_images, &data.train_labels, &data.test_images, &data.test_labels}) {
          if (p->empty()) throw ConfigError("idx data needs train/test image and label paths");
          if (!fs::exists(*p)) throw ConfigError("'" + *p + "' does not exist");
        }
        break;
      case DataFormat::Synthetic:
        if (data.synthetic_classes < 3) throw ConfigError("synthetic data needs at least 3 classes");
        if (data.synthetic_train == 0) throw ConfigError("synthetic training set is empty");
        break;
    }
    if (!data.test_path.empty() && !fs::exists(data.test_path)) {
      throw ConfigError("data.test_path '" + data.test_path + "' does not exist");
    }
  }
};

inline std::vector<std::uint64_t> parse_seed_list(std::string_view s) {
  std::vector<std::uint64_t> seeds;
  for (const auto& token : split_list(s)) {
    const auto v = detail::parse_integer(token);
    if (!v || *v < 0) throw ConfigError("bad seed '" + token + "'");
    seeds.push_back(static_cast<std::uint64_t>(*v));
  }
  return seeds;
}

// Builds an experiment from flat settings; unknown keys are rejected.
inline ExperimentConfig resolve_config(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  cfg.name = kv.get("name", cfg.name);

  auto& d = cfg.data;
  d.format = parse_data_format(kv.get("data.format", "csv"));
  d.path = kv.get("data.path", "");
  d.test_path = kv.get("data.test_path", "");
  d.label_column = static_cast<int>(kv.get_int("data.label_column", -1));
  d.skip_header = kv.get_bool("data.skip_header", false);
  d.train_images = kv.get("data.train_images", "");
  d.train_labels = kv.get("data.train_labels", "");
  d.test_images = kv.get("data.test_images", "");
  d.test_labels = kv.get("data.test_labels", "");
  d.max_train = static_cast<std::size_t>(kv.get_int("data.max_train", 0));
  d.synthetic_train = static_cast<std::size_t>(kv.get_int("data.synthetic_train", 3000));
  d.synthetic_test = static_cast<std::size_t>(kv.get_int("data.synthetic_test", 1000));
  d.synthetic_classes = static_cast<std::size_t>(kv.get_int("data.synthetic_classes", 3));
  d.synthetic_sigma = kv.get_double("data.synthetic_sigma", 0.3);
  d.synthetic_spacing = kv.get_double("data.synthetic_spacing", 4.0);
  const std::string norm = kv.get("data.normalize", d.format == DataFormat::Csv ? "zscore" : "none");
  if (norm != "zscore" && norm != "none") throw ConfigError("data.normalize must be zscore or none");
  d.zscore = norm == "zscore";
  d.test_fraction = kv.get_double("data.test_fraction", 0.1);
  if (kv.has("data.split_seed")) d.split_seed = static_cast<std::uint64_t>(kv.get_int("data.split_seed", 0));

  cfg.flip.kind = parse_flip_kind(kv.get("corruption.kind", "binomial"));
  cfg.flip.q = kv.get_double("corruption.q", 0.1);

  cfg.arch = parse_architecture(kv.get("model.arch", "linear"));

  auto& t = cfg.train;
  t.epochs = static_cast<int>(kv.get_int("train.epochs", t.epochs));
  t.batch_size = static_cast<std::size_t>(kv.get_int("train.batch_size", static_cast<long long>(t.batch_size)));
  t.learning_rate = kv.get_double("train.learning_rate",
                                  cfg.arch.kind == Architecture::Kind::Linear ? 0.1 : 0.05);
  t.momentum = kv.get_double("train.momentum", t.momentum);
  t.l2 = kv.get_double("train.l2", t.l2);
  t.loss = parse_loss_kind(kv.get("train.loss", "ce"));
  t.strategy = parse_strategy(kv.get("train.strategy", "progressive"));
  t.mode = parse_train_mode(kv.get("train.mode", "proden"));
  t.transductive_from_model = kv.get("train.transductive", "weights") == "model";
  t.record_wall_clock = kv.get_bool("train.wall_clock", false);

  cfg.out_dir = kv.get("run.out", "runs");
  if (kv.has("run.seeds")) cfg.seeds = parse_seed_list(kv.get("run.seeds", ""));
  cfg.jobs = static_cast<int>(kv.get_int("run.jobs", 1));
  cfg.checkpoint_every = static_cast<int>(kv.get_int("run.checkpoint_every", 0));

  if (const auto unused = kv.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  cfg.validate();
  return cfg;
}

// Canonical text form of a fully resolved experiment, loadable again.
inline std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& d = cfg.data;
  out << "name = " << cfg.name << "\n\n[data]\n";
  out << "format = " << to_string(d.format) << '\n';
  switch (d.format) {
    case DataFormat::Csv:
      out << "path = " << d.path << "\nlabel_column = " << d.label_column
          << "\nskip_header = " << (d.skip_header ? "true" : "false") << '\n';
      break;
    case DataFormat::Partial:
      out << "path = " << d.path << '\n';
      break;
    case DataFormat::Idx:
      out << "train_images = " << d.train_images << "\ntrain_labels = " << d.train_labels
          << "\ntest_images = " << d.test_images << "\ntest_labels = " << d.test_labels
          << "\nmax_train = " << d.max_train << '\n';
      break;
    case DataFormat::Synthetic:
      out << "synthetic_train = " << d.synthetic_train << "\nsynthetic_test = " << d.synthetic_test
          << "\nsynthetic_classes = " << d.synthetic_classes << "\nsynthetic_sigma = " << detail::format_double(d.synthetic_sigma)
          << "\nsynthetic_spacing = " << detail::format_double(d.synthetic_spacing) << '\n';
      break;
  }
  if (!d.test_path.empty()) out << "test_path = " << d.test_path << '\n';
  out << "normalize = " << (d.zscore ? "zscore" : "none") << '\n';
  out << "test_fraction = " << detail::format_double(d.test_fraction) << '\n';
  if (d.split_seed) out << "split_seed = " << *d.split_seed << '\n';
  out << "\n[corruption]\nkind = " << to_string(cfg.flip.kind) << "\nq = " << detail::format_double(cfg.flip.q) << '\n';
  out << "\n[model]\narch = " << to_string(cfg.arch) << '\n';
  const auto& t = cfg.train;
  out << "\n[train]\nepochs = " << t.epochs << "\nbatch_size = " << t.batch_size
      << "\nlearning_rate = " << detail::format_double(t.learning_rate)
      << "\nmomentum = " << detail::format_double(t.momentum) << "\nl2 = " << detail::format_double(t.l2)
      << "\nloss = " << to_string(t.loss) << "\nstrategy = " << to_string(t.strategy) << "\nmode = " << to_string(t.mode)
      << "\ntransductive = " << (t.transductive_from_model ? "model" : "weights")
      << "\nwall_clock = " << (t.record_wall_clock ? "true" : "false") << '\n';
  out << "\n[run]\nout = " << cfg.out_dir.string() << "\nseeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << "\njobs = " << cfg.jobs << "\ncheckpoint_every = " << cfg.checkpoint_every << '\n';
  return out.str();
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'", Error::Category::Data);
  out << text;
}

inline void write_csv(std::ostream& out, const SupervisedDataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) out << detail::format_double(v) << ',';
    out << data.labels[i] << '\n';
  }
}

// ---- data preparation -------------------------------------------------

// Data loaded once per command; per-seed splits and corruption derive from it.
struct LoadedData {
  std::optional<SupervisedDataset> pool;   // split per seed
  std::optional<SupervisedDataset> train;  // fixed train side (idx)
  std::optional<SupervisedDataset> test;   // fixed test side
  std::optional<PartialDataset> partial;   // already corrupted training data
};

struct RunData {
  PartialDataset train;
  SupervisedDataset test;
};

inline LoadedData load_data(const DataSpec& d) {
  LoadedData loaded;
  const CsvOptions csv{d.label_column, d.skip_header};
  switch (d.format) {
    case DataFormat::Csv: {
      auto pool = load_csv(d.path, csv);
      if (d.test_path.empty()) {
        loaded.pool = d.zscore ? zscore_normalize(std::move(pool)) : std::move(pool);
      } else {
        // Normalize train and test with shared column statistics.
        auto test = load_csv(d.test_path, csv);
        if (test.feature_dim() != pool.feature_dim()) throw ConsistencyError("train and test csv widths differ");
        SupervisedDataset joined;
        joined.class_count = std::max(pool.class_count, test.class_count);
        pool.class_count = test.class_count = joined.class_count;
        std::vector<double> values(pool.features.values().begin(), pool.features.values().end());
        values.insert(values.end(), test.features.values().begin(), test.features.values().end());
        joined.features = Matrix(pool.size() + test.size(), pool.feature_dim(), std::move(values));
        joined.labels = pool.labels;
        joined.labels.insert(joined.labels.end(), test.labels.begin(), test.labels.end());
        if (d.zscore) joined = zscore_normalize(std::move(joined));
        std::vector<std::size_t> tr(pool.size()), te(test.size());
        for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = i;
        for (std::size_t i = 0; i < te.size(); ++i) te[i] = pool.size() + i;
        loaded.train = subset(joined, tr);
        loaded.test = subset(joined, te);
      }
      break;
    }
    case DataFormat::Idx: {
      loaded.train = load_idx(d.train_images, d.train_labels);
      loaded.test = load_idx(d.test_images, d.test_labels);
      const auto c = std::max(loaded.train->class_count, loaded.test->class_count);
      loaded.train->class_count = loaded.test->class_count = c;
      break;
    }
    case DataFormat::Synthetic:
      break;
    case DataFormat::Partial:
      loaded.partial = load_partial(d.path);
      if (!d.test_path.empty()) {
        loaded.test = load_csv(d.test_path, csv);
        loaded.test->class_count = loaded.partial->class_count;
      }
      break;
  }
  return loaded;
}

inline RunData prepare_run(const ExperimentConfig& cfg, const LoadedData& loaded, std::uint64_t seed) {
  const auto& d = cfg.data;
  const std::uint64_t split_seed = d.split_seed.value_or(seed);
  RunData run;
  SupervisedDataset train;
  switch (d.format) {
    case DataFormat::Partial:
      run.train = *loaded.partial;
      if (loaded.test) run.test = *loaded.test;
      return run;
    case DataFormat::Synthetic: {
      auto all = gaussian_clusters(d.synthetic_train + d.synthetic_test, d.synthetic_classes, d.synthetic_sigma,
                                   d.synthetic_spacing, split_seed);
      std::vector<std::size_t> tr(d.synthetic_train), te(d.synthetic_test);
      for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = i;
      for (std::size_t i = 0; i < te.size(); ++i) te[i] = d.synthetic_train + i;
      train = subset(all, tr);
      run.test = subset(all, te);
      break;
    }
    case DataFormat::Csv:
    case DataFormat::Idx:
      if (loaded.pool) {
        auto split = stratified_split(*loaded.pool, d.test_fraction, split_seed);
        train = std::move(split.train);
        run.test = std::move(split.test);
      } else {
        train = *loaded.train;
        run.test = *loaded.test;
      }
      if (d.max_train > 0 && d.max_train < train.size()) {
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(split_seed, Stream::Split);
        rng.shuffle(std::span<std::size_t>(order));
        order.resize(d.max_train);
        std::sort(order.begin(), order.end());
        train = subset(train, order);
      }
      break;
  }
  FlipSpec flip = cfg.flip;
  flip.seed = seed;
  run.train = corrupt(train, flip);
  return run;
}

// ---- running ----------------------------------------------------------

// Runs fn(0..count-1) on up to `jobs` threads; results land by index, so the
// output does not depend on scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next >= count) return;
        k = next++;
      }
      try {
        slots[k].emplace(fn(k));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct SeedRun {
  std::uint64_t seed = 0;
  MetricsLog log;
  double final_test_accuracy = 0.0;
  double final_transductive_accuracy = 0.0;
};

// One training run; writes metrics_seed<S>.csv and checkpoint_seed<S>.bin
// under `dir` when it is non-empty.
inline SeedRun run_seed(const ExperimentConfig& cfg, const LoadedData& loaded, std::uint64_t seed, const fs::path& dir) {
  const RunData data = prepare_run(cfg, loaded, seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  const std::string tag = "seed" + std::to_string(seed);
  EpochCallback on_epoch;
  if (!dir.empty() && cfg.checkpoint_every > 0) {
    on_epoch = [&](int epoch, const ModelParams& p, const WeightMatrix& w) {
      if (epoch % cfg.checkpoint_every == 0 && epoch != tc.epochs) {
        save_checkpoint((dir / ("checkpoint_" + tag + "_epoch" + std::to_string(epoch) + ".bin")).string(),
                        Checkpoint{p, w.rows(), static_cast<std::uint64_t>(epoch)});
      }
    };
  }
  const TrainResult result = train(tc, data.train, data.test, cfg.arch, on_epoch);
  if (!dir.empty()) {
    fs::create_directories(dir);
    save_metrics_csv((dir / ("metrics_" + tag + ".csv")).string(), result.log);
    save_checkpoint((dir / ("checkpoint_" + tag + ".bin")).string(),
                    Checkpoint{result.params, result.weights.rows(), static_cast<std::uint64_t>(tc.epochs)});
  }
  return {seed, result.log, final_test_accuracy(result.log), final_transductive_accuracy(result.log)};
}

inline std::vector<SeedRun> run_seeds(const ExperimentConfig& cfg, const LoadedData& loaded, const fs::path& dir) {
  return parallel_map<SeedRun>(cfg.seeds.size(), cfg.jobs,
                               [&](std::size_t k) { return run_seed(cfg, loaded, cfg.seeds[k], dir); });
}

struct AccuracySummary {
  double mean = 0.0;
  std::optional<double> stddev;  // absent for a single run
  double transductive_mean = 0.0;
};

inline AccuracySummary summarize(const std::vector<SeedRun>& runs) {
  AccuracySummary s;
  if (runs.size() >= 2) {
    std::vector<MetricsLog> logs;
    for (const auto& r : runs) logs.push_back(r.log);
    const auto summary = summarize_seeds(logs);
    s.mean = summary.test_accuracy.mean;
    s.stddev = summary.test_accuracy.stddev;
    s.transductive_mean = summary.transductive_accuracy.mean;
  } else if (!runs.empty()) {
    s.mean = runs.front().final_test_accuracy;
    s.transductive_mean = runs.front().final_transductive_accuracy;
  }
  return s;
}

inline std::string percent(double fraction) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << 100.0 * fraction;
  return out.str();
}

inline std::string format_mean_std(const AccuracySummary& s) {
  return percent(s.mean) + "±" + (s.stddev ? percent(*s.stddev) : std::string("n/a")) + "%";
}

inline constexpr const char* kSummaryCsvHeader = "preset,mean,std,target,pass";

// ---- commands -----------------------------------------------------------

struct CorruptSummary {
  std::size_t instances = 0;
  std::size_t class_count = 0;
  double mean_candidates = 0.0;
  double ambiguity = 0.0;
  fs::path container;
};

// Corrupts the training side for the first seed and writes partial.txt
// (plus test.csv when a test split exists) into the output directory.
inline CorruptSummary cmd_corrupt(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.data.format == DataFormat::Partial) throw ConfigError("data is already partially labeled");
  const LoadedData loaded = load_data(cfg.data);
  const RunData run = prepare_run(cfg, loaded, cfg.seeds.front());
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "resolved_config.ini", echo_config(cfg));
  CorruptSummary summary;
  summary.container = cfg.out_dir / "partial.txt";
  save_partial(summary.container.string(), run.train);
  if (run.test.size() > 0) {
    std::ostringstream csv;
    write_csv(csv, run.test);
    write_text_file(cfg.out_dir / "test.csv", csv.str());
  }
  summary.instances = run.train.size();
  summary.class_count = run.train.class_count;
  summary.mean_candidates = mean_candidate_size(run.train);
  summary.ambiguity = estimate_ambiguity(run.train);
  log << "n = " << summary.instances << ", c = " << summary.class_count
      << ", mean |S| = " << detail::format_double(summary.mean_candidates)
      << ", ambiguity = " << detail::format_double(summary.ambiguity) << '\n';
  return summary;
}

struct TrainSummary {
  std::vector<SeedRun> runs;
  AccuracySummary accuracy;
};

inline TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
  const LoadedData loaded = load_data(cfg.data);
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "resolved_config.ini", echo_config(cfg));
  TrainSummary summary;
  summary.runs = run_seeds(cfg, loaded, cfg.out_dir);
  summary.accuracy = summarize(summary.runs);
  std::ostringstream csv;
  csv << kSummaryCsvHeader << '\n'
      << cfg.name << ',' << detail::format_double(summary.accuracy.mean) << ','
      << (summary.accuracy.stddev ? detail::format_double(*summary.accuracy.stddev) : "") << ",,\n";
  write_text_file(cfg.out_dir / "summary.csv", csv.str());
  log << cfg.name << ": test accuracy " << format_mean_std(summary.accuracy) << " over " << summary.runs.size()
      << " seed(s), transductive " << percent(summary.accuracy.transductive_mean) << "%\n";
  return summary;
}

enum class SweepAxis { Q, Strategy, LearningRate };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "q") return SweepAxis::Q;
  if (s == "strategy") return SweepAxis::Strategy;
  if (s == "lr") return SweepAxis::LearningRate;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "' (expected q, strategy or lr)");
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Q: return "q";
    case SweepAxis::Strategy: return "strategy";
    case SweepAxis::LearningRate: return "lr";
  }
  return "?";
}

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double transductive_accuracy = 0.0;
};

inline ExperimentConfig with_axis_value(ExperimentConfig cfg, SweepAxis axis, const std::string& value) {
  switch (axis) {
    case SweepAxis::Q: {
      const auto q = detail::parse_double(value);
      if (!q) throw ConfigError("sweep value '" + value + "' is not a number");
      cfg.flip.q = *q;
      break;
    }
    case SweepAxis::Strategy:
      cfg.train.strategy = parse_strategy(value);
      break;
    case SweepAxis::LearningRate: {
      const auto lr = detail::parse_double(value);
      if (!lr) throw ConfigError("sweep value '" + value + "' is not a number");
      cfg.train.learning_rate = *lr;
      break;
    }
  }
  cfg.validate();
  return cfg;
}

// Every (value, seed) pair; aggregated into sweep.csv keyed by both.
inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& base, SweepAxis axis,
                                       const std::vector<std::string>& values, std::ostream& log = std::cout) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ExperimentConfig> points;
  for (const auto& v : values) points.push_back(with_axis_value(base, axis, v));
  const LoadedData loaded = load_data(base.data);
  fs::create_directories(base.out_dir);
  write_text_file(base.out_dir / "resolved_config.ini", echo_config(base));

  const std::size_t per_point = base.seeds.size();
  auto rows = parallel_map<SweepRow>(values.size() * per_point, base.jobs, [&](std::size_t k) {
    const auto& cfg = points[k / per_point];
    const auto seed = base.seeds[k % per_point];
    std::string dir_name = to_string(axis) + "_" + values[k / per_point];
    std::replace(dir_name.begin(), dir_name.end(), ':', '-');
    const auto run = run_seed(cfg, loaded, seed, base.out_dir / dir_name);
    return SweepRow{values[k / per_point], seed, run.final_test_accuracy, run.final_transductive_accuracy};
  });

  std::ostringstream csv;
  csv << "axis,value,seed,test_acc,transductive_acc\n";
  for (const auto& r : rows) {
    csv << to_string(axis) << ',' << r.value << ',' << r.seed << ',' << detail::format_double(r.test_accuracy) << ','
        << detail::format_double(r.transductive_accuracy) << '\n';
  }
  write_text_file(base.out_dir / "sweep.csv", csv.str());
  log << "sweep over " << to_string(axis) << ": " << rows.size() << " runs written to "
      << (base.out_dir / "sweep.csv").string() << '\n';
  return rows;
}

// ---- presets --------------------------------------------------------------

struct PresetOptions {
  fs::path out_dir = "repro";
  fs::path data_dir = "data";    // holds yeast.csv
  fs::path mnist_dir = "mnist";  // holds the four MNIST ubyte files
  int jobs = 1;
  std::vector<std::string> overrides;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"yeast-binomial-01", "yeast-binomial-07", "mnist-linear-01-small",
                                              "synthetic-consistency"};
  return names;
}

inline std::string preset_list() {
  std::string s;
  for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

// How a preset is judged: either a mean-accuracy window, or the gap between
// PRODEN and the supervised reference.
struct PresetTarget {
  double paper_mean = 0.0;  // target column of summary.csv, as a fraction
  double lo = 0.0, hi = 1.0;
  std::optional<double> max_gap_to_oracle;
};

struct Preset {
  KeyValueConfig settings;
  PresetTarget target;
};

inline Preset make_preset(const std::string& name, const PresetOptions& opts) {
  Preset p;
  auto& kv = p.settings;
  kv.set("name", name);
  kv.set("run.seeds", "1,2,3,4,5");
  kv.set("train.momentum", "0.9");
  kv.set("train.batch_size", "256");
  kv.set("train.loss", "ce");
  kv.set("train.strategy", "progressive");
  kv.set("model.arch", "linear");
  kv.set("corruption.kind", "binomial");
  if (name == "yeast-binomial-01" || name == "yeast-binomial-07") {
    kv.set("data.format", "csv");
    kv.set("data.path", (opts.data_dir / "yeast.csv").string());
    kv.set("data.normalize", "zscore");
    kv.set("data.test_fraction", "0.1");
    kv.set("train.epochs", "500");
    const bool low = name == "yeast-binomial-01";
    kv.set("corruption.q", low ? "0.1" : "0.7");
    p.target = low ? PresetTarget{0.5905, 0.52, 0.66, std::nullopt} : PresetTarget{0.5515, 0.47, 0.63, std::nullopt};
  } else if (name == "mnist-linear-01-small") {
    kv.set("data.format", "idx");
    kv.set("data.train_images", (opts.mnist_dir / "train-images-idx3-ubyte").string());
    kv.set("data.train_labels", (opts.mnist_dir / "train-labels-idx1-ubyte").string());
    kv.set("data.test_images", (opts.mnist_dir / "t10k-images-idx3-ubyte").string());
    kv.set("data.test_labels", (opts.mnist_dir / "t10k-labels-idx1-ubyte").string());
    kv.set("data.max_train", "10000");
    kv.set("corruption.q", "0.1");
    kv.set("train.epochs", "500");
    p.target = PresetTarget{0.0, 0.0, 1.0, 0.03};
  } else if (name == "synthetic-consistency") {
    kv.set("data.format", "synthetic");
    kv.set("data.synthetic_train", "3000");
    kv.set("data.synthetic_test", "1000");
    kv.set("data.synthetic_classes", "3");
    kv.set("data.synthetic_sigma", "0.3");
    kv.set("data.synthetic_spacing", "4");
    kv.set("corruption.q", "0.3");
    kv.set("train.epochs", "200");
    p.target = PresetTarget{0.0, 0.0, 1.0, 0.02};
  } else {
    throw ConfigError("unknown preset '" + name + "'; available presets: " + preset_list());
  }
  kv.set("run.out", (opts.out_dir / name).string());
  kv.set("run.jobs", std::to_string(opts.jobs));
  for (const auto& o : opts.overrides) kv.apply_override(o);
  return p;
}

struct ReproOutcome {
  std::string preset;
  AccuracySummary proden;
  std::optional<AccuracySummary> oracle;
  double target = 0.0;
  bool pass = false;
};

// Runs a preset end to end and writes summary.csv and report.txt into
// <out>/<preset>/. Gap presets also run PN-oracle on the same seeds.
inline ReproOutcome cmd_repro(const std::string& preset_name, const PresetOptions& opts,
                              std::ostream& log = std::cout) {
  const Preset preset = make_preset(preset_name, opts);
  const ExperimentConfig cfg = resolve_config(preset.settings);
  const LoadedData loaded = load_data(cfg.data);
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "resolved_config.ini", echo_config(cfg));

  ReproOutcome outcome;
  outcome.preset = preset_name;
  outcome.proden = summarize(run_seeds(cfg, loaded, cfg.out_dir / "proden"));
  std::ostringstream report;
  report << "preset: " << preset_name << '\n';
  report << "PRODEN test accuracy (last 10 epochs, " << cfg.seeds.size() << " seeds): " << format_mean_std(outcome.proden)
         << '\n';
  if (preset.target.max_gap_to_oracle) {
    ExperimentConfig oracle_cfg = cfg;
    oracle_cfg.train.mode = TrainMode::PnOracle;
    outcome.oracle = summarize(run_seeds(oracle_cfg, loaded, cfg.out_dir / "pn-oracle"));
    outcome.target = outcome.oracle->mean;
    const double gap = outcome.oracle->mean - outcome.proden.mean;
    outcome.pass = std::abs(gap) <= *preset.target.max_gap_to_oracle;
    report << "PN-oracle test accuracy: " << format_mean_std(*outcome.oracle) << '\n';
    report << "gap (oracle - PRODEN): " << percent(gap) << " points, tolerance "
           << percent(*preset.target.max_gap_to_oracle) << " -> " << (outcome.pass ? "PASS" : "FAIL") << '\n';
  } else {
    outcome.target = preset.target.paper_mean;
    outcome.pass = outcome.proden.mean >= preset.target.lo && outcome.proden.mean <= preset.target.hi;
    report << "reference: " << percent(preset.target.paper_mean) << "%, accepted window [" << percent(preset.target.lo)
           << "%, " << percent(preset.target.hi) << "%] -> " << (outcome.pass ? "PASS" : "FAIL") << '\n';
  }
  std::ostringstream csv;
  csv << kSummaryCsvHeader << '\n'
      << preset_name << ',' << detail::format_double(outcome.proden.mean) << ','
      << (outcome.proden.stddev ? detail::format_double(*outcome.proden.stddev) : "") << ','
      << detail::format_double(outcome.target) << ',' << (outcome.pass ? "true" : "false") << '\n';
  write_text_file(cfg.out_dir / "summary.csv", csv.str());
  write_text_file(cfg.out_dir / "report.txt", report.str());
  log << report.str();
  return outcome;
}

}  // namespace proden
