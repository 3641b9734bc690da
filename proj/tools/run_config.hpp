#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "emsa/data.hpp"
#include "emsa/network.hpp"
#include "emsa/solvers.hpp"

// Experiment configuration: structured key-value text with sections, every
// knob echoed verbatim into the run's output directory. Command-line flags
// override file values.

namespace emsa::cli {

enum class Experiment { Sine, MnistDense, MnistConv, FashionConv, Custom };

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct RunConfig {
  Experiment experiment = Experiment::Sine;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: $EMSA_OUTPUT_DIR or ./runs/<experiment>-<method>
  InitScheme init = InitScheme::TruncatedNormal;
  bool timing = true;  // off: wall-time columns written as 0 for byte-stable output

  // Network overrides; zero/negative means "preset default".
  int net_layers = 0;      // residual depth (sine, custom)
  double net_delta = 0.0;  // step size
  int net_dim = 0;         // state dim (sine, custom)
  int net_channels = 0;    // conv channels
  int net_hidden = 0;      // dense hidden width
  int net_residual_layers = 0;

  SolverConfig solver;

  // Data controls.
  std::filesystem::path data_dir = "data/mnist";
  Eigen::Index train_samples = 1000;  // sine
  Eigen::Index test_samples = 1000;   // sine, and held-out cap for subsets
  Eigen::Index subset = 0;            // mnist: train on the first `subset` samples

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_ini_text(const std::string& text);
  /// Serializes every effective knob (the provenance echo).
  std::string to_ini_string() const;

  NetworkSpec build_network() const;

  struct Data {
    Dataset train;
    std::optional<Dataset> test;
  };
  /// Builds (and lifts, for sine) the datasets this run trains on.
  Data load_data() const;

  std::filesystem::path resolved_out_dir() const;
};

/// Minimal INI reader: [section] headers, key = value pairs, '#'/';' comments.
std::map<std::string, std::map<std::string, std::string>> parse_ini(const std::string& text);

}  // namespace emsa::cli
