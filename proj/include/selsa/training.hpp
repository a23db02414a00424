#pragma once

#include "selsa/network.hpp"
#include "selsa/proposal.hpp"
#include "selsa/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace selsa {

// Which proposals a reference proposal may aggregate from during training.
enum class AggregationMode { None, WithinFrame, FullSequence };

std::string_view to_string(AggregationMode m);
std::optional<AggregationMode> parse_aggregation_mode(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.03;
  std::vector<int> lr_decay_steps = {2500, 3750};
  double decay_factor = 0.1;
  int n_iterations = 5000;
  int frames_per_sample = 3;  // reference frame plus extras
  int sim_dim = 0;            // 0 means the feature dimension
  bool residual = true;       // see SelsaParams::residual
  std::uint64_t seed = 0;
  AggregationMode aggregation_mode = AggregationMode::FullSequence;

  void validate() const;
  double learning_rate_at(int iteration) const;
};

struct CrossEntropy {
  double loss = 0;
  Matrix<double> grad_scores;
};

// Mean softmax cross-entropy over rows; labels index the score columns.
CrossEntropy cross_entropy(const Matrix<double>& scores, const Eigen::VectorXi& labels);

struct FrameSample {
  int ref_frame = 0;
  std::vector<int> frames;  // sorted, contains ref_frame
};

// FullSequence draws frames_per_sample - 1 distinct extra frames uniformly
// from the rest of the video; the other modes use the reference frame alone.
FrameSample sample_training_frames(int n_frames, AggregationMode mode, int frames_per_sample, Rng& rng);

SelsaParams<double> initial_params(int feature_dim, int sim_dim, int num_classes, std::uint64_t seed,
                                   bool residual = true);
// Initialization train() starts from for this config and data shape.
SelsaParams<double> initial_params(const TrainConfig& config, int feature_dim, int num_classes);

struct LossRecord {
  int iteration = 0;
  double loss = 0;
  double learning_rate = 0;
};

struct TrainResult {
  SelsaParams<double> params;
  std::vector<LossRecord> history;
};

// Plain SGD over one reference frame per iteration. Throws DivergenceError
// on a non-finite loss.
TrainResult train(const std::vector<VideoSequence>& videos, const TrainConfig& config);
TrainResult train(const std::vector<VideoSequence>& videos, const TrainConfig& config, SelsaParams<double> init);

// iteration,loss,lr
void write_loss_csv(std::ostream& os, const std::vector<LossRecord>& history);

}  // namespace selsa
