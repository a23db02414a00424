#pragma once

#include "selsa/ablation.hpp"
#include "selsa/synthetic.hpp"
#include "selsa/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace selsa {

// Everything one experiment run needs. Every field has a default, so an
// empty JSON object is a complete config.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  SyntheticSpec synthetic;
  int n_train_videos = 20;
  int n_test_videos = 10;
  TrainConfig train;
  std::vector<AggregationMode> train_modes = {AggregationMode::None, AggregationMode::WithinFrame,
                                              AggregationMode::FullSequence};
  EvalConfig eval;
  // Frames of the first test video used for the spectral report.
  int spectral_frames = 20;
  std::filesystem::path output_dir = "out";

  // Derives the generator, trainer and evaluator seeds from `seed`.
  void apply_seed(std::uint64_t root);
  void validate() const;
};

// Strict parse: unknown keys and wrongly typed values raise ConfigError
// naming the key path.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const ExperimentConfig& config);

// Sidecar describing a generated dataset.
std::string synthetic_spec_to_json_text(const SyntheticSpec& spec, int n_train_videos, int n_test_videos);
struct DatasetSidecar {
  SyntheticSpec spec;
  int n_train_videos = 0;
  int n_test_videos = 0;
};
DatasetSidecar synthetic_spec_from_json_text(const std::string& text);

}  // namespace selsa
