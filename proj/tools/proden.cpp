// proden: corrupt datasets, train, sweep and reproduce presets.
//
//   proden corrupt --config cfg.ini --out runs/c
//   proden train   --config cfg.ini --seed-list 1,2,3 --override train.epochs=50
//   proden sweep   --config cfg.ini --axis q --values 0.5,0.7,0.9
//   proden repro   yeast-binomial-01 --data-dir data

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proden/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kDivergence = 4 };

struct CommonFlags {
  std::string config;
  std::string seed_list;
  std::string out;
  std::string format;
  std::vector<std::string> overrides;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI config file");
  cmd->add_option("--seed-list", f.seed_list, "comma-separated seeds, e.g. 1,2,3,4,5");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--format", f.format, "input format")->check(CLI::IsMember({"csv", "idx", "synthetic", "partial"}));
  cmd->add_option("--override", f.overrides, "KEY=VALUE, repeatable")->take_all();
  cmd->add_option("--jobs", f.jobs, "worker threads");
}

proden::ExperimentConfig resolve(const CommonFlags& f) {
  auto kv = f.config.empty() ? proden::KeyValueConfig{} : proden::KeyValueConfig::load(f.config);
  if (!f.format.empty()) kv.set("data.format", f.format);
  if (!f.seed_list.empty()) kv.set("run.seeds", f.seed_list);
  if (!f.out.empty()) kv.set("run.out", f.out);
  if (f.jobs > 0) kv.set("run.jobs", std::to_string(f.jobs));
  for (const auto& o : f.overrides) kv.apply_override(o);
  return proden::resolve_config(kv);
}

int exit_code_for(const proden::Error& e) {
  switch (e.category()) {
    case proden::Error::Category::Config: return kConfig;
    case proden::Error::Category::Data: return kData;
    case proden::Error::Category::Divergence: return kDivergence;
    case proden::Error::Category::Other: return kOther;
  }
  return kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRODEN partial-label learning toolkit"};
  app.require_subcommand(1);

  CommonFlags corrupt_flags, train_flags, sweep_flags;
  auto* corrupt = app.add_subcommand("corrupt", "write a partially labeled copy of a dataset");
  add_common(corrupt, corrupt_flags);

  auto* train = app.add_subcommand("train", "train one model per seed");
  add_common(train, train_flags);

  auto* sweep = app.add_subcommand("sweep", "train over values x seeds along one axis");
  add_common(sweep, sweep_flags);
  std::string axis;
  std::string values;
  sweep->add_option("--axis", axis, "q, strategy or lr")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();

  auto* repro = app.add_subcommand("repro", "run a named preset and compare against its target");
  std::string preset;
  proden::PresetOptions preset_opts;
  std::string repro_out, data_dir, mnist_dir;
  int repro_jobs = 1;
  std::string repro_seeds;
  std::vector<std::string> repro_overrides;
  repro->add_option("preset", preset, "preset name")->required();
  repro->add_option("--out", repro_out, "output root (default: repro)");
  repro->add_option("--data-dir", data_dir, "directory holding yeast.csv (default: data)");
  repro->add_option("--mnist-dir", mnist_dir, "directory holding the MNIST ubyte files");
  repro->add_option("--seed-list", repro_seeds, "comma-separated seeds");
  repro->add_option("--override", repro_overrides, "KEY=VALUE, repeatable")->take_all();
  repro->add_option("--jobs", repro_jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*corrupt) {
      proden::cmd_corrupt(resolve(corrupt_flags));
    } else if (*train) {
      proden::cmd_train(resolve(train_flags));
    } else if (*sweep) {
      proden::cmd_sweep(resolve(sweep_flags), proden::parse_sweep_axis(axis), proden::split_list(values));
    } else if (*repro) {
      if (!repro_out.empty()) preset_opts.out_dir = repro_out;
      if (!data_dir.empty()) preset_opts.data_dir = data_dir;
      if (!mnist_dir.empty()) preset_opts.mnist_dir = mnist_dir;
      preset_opts.jobs = repro_jobs;
      if (!repro_seeds.empty()) preset_opts.overrides.push_back("run.seeds=" + repro_seeds);
      for (const auto& o : repro_overrides) preset_opts.overrides.push_back(o);
      const auto outcome = proden::cmd_repro(preset, preset_opts);
      (void)outcome;
    }
  } catch (const proden::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
