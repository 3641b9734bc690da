#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "artifacts.hpp"
#include "emsa/invariants.hpp"
#include "run_config.hpp"

// Experiment runner for Hamiltonian-maximization training (E-MSA) and its
// gradient-descent baselines.
//
// Note on scaling: per-layer Hamiltonian sums and loss gradients use the
// unweighted batch-sum convention, so rho and eta are tuned per batch size.

namespace {

using namespace emsa;
using namespace emsa::cli;

struct CommonFlags {
  std::string config_path;
  std::string experiment;
  std::string method;
  std::string out_dir;
  std::string init;
  std::string data_dir;
  std::int64_t seed = -1;
  int iterations = -1;
  std::string batch_size;
  double rho = -1.0;
  double eta = -1.0;
  int eval_every = -1;
  int threads = -1;
  std::int64_t subset = -1;
  std::int64_t train_samples = -1;
  std::int64_t test_samples = -1;
  std::string timing;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "Config file (INI-style sections)");
  cmd->add_option("--experiment", f.experiment, "sine|mnist_dense|mnist_conv|fashion_conv|custom");
  cmd->add_option("--method", f.method, "emsa|basic_msa|grad_msa|sgd|adagrad|adam");
  cmd->add_option("--out", f.out_dir, "Output directory (default $EMSA_OUTPUT_DIR or ./runs)");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--iterations", f.iterations, "Outer iterations");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size or 'full'");
  cmd->add_option("--rho", f.rho, "Penalty coefficient (emsa; scales with batch size)");
  cmd->add_option("--eta", f.eta, "Learning rate (gradient methods; scales with batch size)");
  cmd->add_option("--eval-every", f.eval_every, "Full evaluation every k iterations");
  cmd->add_option("--threads", f.threads, "Worker cap for per-layer maximization");
  cmd->add_option("--init", f.init, "truncated_normal|zeros");
  cmd->add_option("--data-dir", f.data_dir, "Directory holding IDX files");
  cmd->add_option("--subset", f.subset, "Train on the first N samples (mnist)");
  cmd->add_option("--train-samples", f.train_samples, "Sample count (sine)");
  cmd->add_option("--test-samples", f.test_samples, "Test sample count");
  cmd->add_option("--timing", f.timing, "on|off: wall-clock columns in history.csv");
}

RunConfig merge_flags(const CommonFlags& f) {
  RunConfig cfg = f.config_path.empty() ? RunConfig{} : RunConfig::from_file(f.config_path);
  if (!f.experiment.empty()) cfg.experiment = experiment_from_string(f.experiment);
  if (!f.method.empty()) cfg.solver.method = method_from_string(f.method);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.init.empty()) cfg.init = init_scheme_from_string(f.init);
  if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.iterations >= 0) cfg.solver.iterations = f.iterations;
  if (!f.batch_size.empty()) {
    cfg.solver.batch_size =
        f.batch_size == "full" ? 0 : static_cast<Eigen::Index>(std::stoll(f.batch_size));
  }
  if (f.rho >= 0.0) cfg.solver.rho = f.rho;
  if (f.eta >= 0.0) cfg.solver.eta = f.eta;
  if (f.eval_every >= 1) cfg.solver.eval_every = f.eval_every;
  if (f.threads >= 1) cfg.solver.threads = f.threads;
  if (f.subset >= 0) cfg.subset = f.subset;
  if (f.train_samples >= 1) cfg.train_samples = f.train_samples;
  if (f.test_samples >= 0) cfg.test_samples = f.test_samples;
  if (!f.timing.empty()) cfg.timing = (f.timing == "on" || f.timing == "true" || f.timing == "1");
  cfg.solver.seed = cfg.seed;
  return cfg;
}

struct RunOutput {
  TrainResult result;
  RunConfig config;
};

RunOutput execute_run(const RunConfig& cfg) {
  const NetworkSpec net = cfg.build_network();
  const RunConfig::Data data = cfg.load_data();
  const ParamStack init = init_params(net, cfg.init, cfg.seed);
  TrainResult result =
      train(net, init, data.train, data.test ? &*data.test : nullptr, cfg.solver);
  return RunOutput{std::move(result), cfg};
}

int cmd_train(const CommonFlags& flags) {
  const RunConfig cfg = merge_flags(flags);
  const std::filesystem::path out = cfg.resolved_out_dir();
  std::filesystem::create_directories(out);

  const NetworkSpec net = cfg.build_network();
  const RunConfig::Data data = cfg.load_data();
  const ParamStack init = init_params(net, cfg.init, cfg.seed);
  const TrainResult result =
      train(net, init, data.train, data.test ? &*data.test : nullptr, cfg.solver);

  write_history_csv(out / "history.csv", result.history, cfg.timing);
  if (cfg.timing) write_timings_csv(out / "timings.csv", result.history);
  write_params_blob(out, net, result.params);
  std::ofstream echo(out / "run_config.ini", std::ios::binary);
  echo << cfg.to_ini_string();

  double final_J = 0.0;
  for (const IterationReport& r : result.history) {
    if (r.J_train) final_J = *r.J_train;
  }
  std::cout << "experiment=" << to_string(cfg.experiment)
            << " method=" << emsa::to_string(cfg.solver.method)
            << " iterations=" << result.history.size() << " status=" << to_string(result.status)
            << " final_J_train=" << final_J << "\n"
            << "artifacts written to " << out.string() << "\n";
  // Divergence is a result, not a failure.
  return 0;
}

int cmd_diag(std::uint64_t seed, int instances) {
  InvariantSuiteOptions opts;
  opts.seed = seed;
  opts.instances_per_kind = instances;
  const auto results = run_invariant_suite(opts);
  std::printf("%-32s %-6s %-14s %s\n", "check", "result", "worst_rel_err", "detail");
  for (const CheckResult& r : results) {
    std::printf("%-32s %-6s %-14.3e %s\n", r.name.c_str(), r.pass ? "pass" : "FAIL", r.worst_err,
                r.detail.c_str());
  }
  return all_passed(results) ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& out_path,
                const CommonFlags& flags) {
  if (config_paths.empty()) {
    std::cerr << "compare: at least one config is required\n";
    return 2;
  }
  std::vector<RunConfig> configs;
  for (const std::string& path : config_paths) {
    CommonFlags merged = flags;
    merged.config_path = path;
    configs.push_back(merge_flags(merged));
  }
  for (const RunConfig& cfg : configs) {
    if (cfg.experiment != configs.front().experiment) {
      std::cerr << "compare: configs must share one experiment preset\n";
      return 2;
    }
  }
  std::vector<IterationReport> merged;
  for (const RunConfig& cfg : configs) {
    std::cerr << "running " << emsa::to_string(cfg.solver.method) << "...\n";
    RunOutput run = execute_run(cfg);
    for (IterationReport& r : run.result.history) {
      merged.push_back(std::move(r));
    }
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const IterationReport& a, const IterationReport& b) {
                     if (a.method != b.method) return a.method < b.method;
                     return a.iter < b.iter;
                   });
  std::ofstream out(out_path, std::ios::binary);
  out << history_csv_text(merged, configs.front().timing);
  std::cout << "merged history for " << configs.size() << " runs written to " << out_path << "\n";
  return 0;
}

int cmd_data_info(const CommonFlags& flags) {
  const RunConfig cfg = merge_flags(flags);
  const RunConfig::Data data = cfg.load_data();
  const auto describe = [](const char* label, const Dataset& ds) {
    std::cout << label << ": name=" << ds.name << " samples=" << ds.size()
              << " raw_dim=" << ds.inputs.rows() << " normalization=" << ds.normalization << "\n";
    if (ds.is_classification()) {
      std::map<int, int> hist;
      for (Eigen::Index i = 0; i < ds.labels.size(); ++i) hist[ds.labels[i]]++;
      std::cout << "  label histogram:";
      for (const auto& [label, count] : hist) std::cout << " " << label << ":" << count;
      std::cout << "\n";
    } else {
      std::cout << "  targets in [" << ds.scalar_targets.minCoeff() << ", "
                << ds.scalar_targets.maxCoeff() << "]\n";
    }
  };
  describe("train", data.train);
  if (data.test) describe("test", *data.test);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pontryagin/MSA training toolkit for residual networks"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "Run one training experiment");
  add_common_flags(train_cmd, train_flags);

  std::uint64_t diag_seed = 8;
  int diag_instances = 20;
  CLI::App* diag_cmd = app.add_subcommand("diag", "Run the invariant suite");
  diag_cmd->add_option("--seed", diag_seed, "Suite RNG seed");
  diag_cmd->add_option("--instances", diag_instances, "Random instances per layer kind");

  CommonFlags compare_flags;
  std::vector<std::string> compare_configs;
  std::string compare_out = "compare.csv";
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run several configs and merge their histories");
  compare_cmd->add_option("configs", compare_configs, "Config files (same experiment preset)");
  compare_cmd->add_option("-o,--merged-out", compare_out, "Merged CSV path");
  add_common_flags(compare_cmd, compare_flags);

  CommonFlags info_flags;
  CLI::App* info_cmd = app.add_subcommand("data-info", "Describe the datasets a config loads");
  add_common_flags(info_cmd, info_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (diag_cmd->parsed()) return cmd_diag(diag_seed, diag_instances);
    if (compare_cmd->parsed()) return cmd_compare(compare_configs, compare_out, compare_flags);
    if (info_cmd->parsed()) return cmd_data_info(info_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
