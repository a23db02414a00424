#pragma once

#include "selsa/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selsa {

struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  bool seq_nms = false;
  bool plot_data = false;
  std::optional<std::filesystem::path> checkpoint;
};

// Config file (or defaults) with command-line overrides applied.
ExperimentConfig resolve_config(const CliOptions& opts);

struct Dataset {
  std::vector<VideoSequence> train;
  std::vector<VideoSequence> test;
};

// Reads <out>/data when a generated dataset is present, otherwise generates
// the same videos in memory.
Dataset load_or_generate_dataset(const ExperimentConfig& config);

// Output layout under config.output_dir:
//   config.json                         resolved config
//   data/dataset.json                   sidecar spec
//   data/{train,test}_NNN_{proposals,gt}.csv
//   checkpoint_<mode>.csv, loss_<mode>.csv
//   results.csv, detections/<mode>/test_NNN.csv, curves/<name>.csv
//   spectral_risk.csv
void cmd_generate(const ExperimentConfig& config, std::ostream& log);
void cmd_train(const ExperimentConfig& config, std::ostream& log);
void cmd_eval(const ExperimentConfig& config, bool plot_data, const std::optional<std::filesystem::path>& checkpoint,
              std::ostream& log);
void cmd_spectral(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                  std::ostream& log);

// Parses argv and dispatches. Returns the process exit status:
// 0 success, 1 unexpected failure, 2 config/input error, 3 divergence, 4 IO.
int run_cli(int argc, char** argv);

}  // namespace selsa
