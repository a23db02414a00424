#include "selsa/training.hpp"

#include "selsa/video_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace selsa {

std::string_view to_string(AggregationMode m) {
  switch (m) {
    case AggregationMode::None: return "none";
    case AggregationMode::WithinFrame: return "within_frame";
    case AggregationMode::FullSequence: return "full_sequence";
  }
  return "none";
}

std::optional<AggregationMode> parse_aggregation_mode(std::string_view s) {
  for (auto m : {AggregationMode::None, AggregationMode::WithinFrame, AggregationMode::FullSequence})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate: must be >= 0");
  if (!(decay_factor > 0 && decay_factor <= 1)) throw ConfigError("train.decay_factor: must be in (0, 1]");
  if (n_iterations < 0) throw ConfigError("train.n_iterations: must be >= 0");
  if (frames_per_sample < 1) throw ConfigError("train.frames_per_sample: must be >= 1");
  if (sim_dim < 0) throw ConfigError("train.sim_dim: must be >= 0");
}

double TrainConfig::learning_rate_at(int iteration) const {
  double lr = learning_rate;
  for (int step : lr_decay_steps)
    if (iteration >= step) lr *= decay_factor;
  return lr;
}

CrossEntropy cross_entropy(const Matrix<double>& scores, const Eigen::VectorXi& labels) {
  if (scores.rows() != labels.size()) throw InputError("cross_entropy: label count != score rows");
  if (scores.rows() == 0) throw InputError("cross_entropy: empty batch");
  CrossEntropy out;
  out.grad_scores = softmax_rows(scores);
  const double inv_n = 1.0 / static_cast<double>(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int y = labels(i);
    if (y < 0 || y >= scores.cols())
      throw InputError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(scores.cols() - 1) +
                       "]");
    const double m = scores.row(i).maxCoeff();
    const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
    out.loss += (lse - scores(i, y)) * inv_n;
    out.grad_scores(i, y) -= 1.0;
  }
  out.grad_scores *= inv_n;
  return out;
}

FrameSample sample_training_frames(int n_frames, AggregationMode mode, int frames_per_sample, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, n_frames - 1);
  FrameSample s;
  s.ref_frame = pick(rng);
  s.frames = {s.ref_frame};
  if (mode != AggregationMode::FullSequence) return s;

  const int extras = std::min(frames_per_sample - 1, n_frames - 1);
  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(std::max(0, n_frames - 1)));
  for (int f = 0; f < n_frames; ++f)
    if (f != s.ref_frame) others.push_back(f);
  // Partial Fisher-Yates: the first `extras` entries are a uniform draw
  // without replacement.
  for (int k = 0; k < extras; ++k) {
    std::uniform_int_distribution<int> j(k, static_cast<int>(others.size()) - 1);
    std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(j(rng))]);
    s.frames.push_back(others[static_cast<std::size_t>(k)]);
  }
  std::sort(s.frames.begin(), s.frames.end());
  return s;
}

SelsaParams<double> initial_params(int feature_dim, int sim_dim, int num_classes, std::uint64_t seed, bool residual) {
  Rng rng = make_rng(seed, 0x5e15a);
  auto p = init_params<double>(feature_dim, sim_dim, num_classes, rng);
  p.residual = residual;
  return p;
}

SelsaParams<double> initial_params(const TrainConfig& config, int feature_dim, int num_classes) {
  return initial_params(feature_dim, config.sim_dim > 0 ? config.sim_dim : feature_dim, num_classes, config.seed,
                        config.residual);
}

TrainResult train(const std::vector<VideoSequence>& videos, const TrainConfig& config) {
  if (videos.empty()) throw ConfigError("train: empty training set");
  return train(videos, config, initial_params(config, videos.front().feature_dim, videos.front().num_classes));
}

TrainResult train(const std::vector<VideoSequence>& videos, const TrainConfig& config, SelsaParams<double> init) {
  config.validate();
  if (videos.empty()) throw ConfigError("train: empty training set");
  init.validate();
  for (const auto& v : videos) {
    if (v.feature_dim != init.feature_dim())
      throw ConfigError("train: video feature dim " + std::to_string(v.feature_dim) + " != parameter dim " +
                        std::to_string(init.feature_dim()));
    if (v.num_classes != init.num_classes()) throw ConfigError("train: video class count != parameter class count");
  }

  TrainResult result;
  result.params = std::move(init);
  result.history.reserve(static_cast<std::size_t>(config.n_iterations));
  Rng rng = make_rng(config.seed, 0x7a1);
  std::uniform_int_distribution<int> pick_video(0, static_cast<int>(videos.size()) - 1);
  const bool aggregate = config.aggregation_mode != AggregationMode::None;

  for (int it = 0; it < config.n_iterations; ++it) {
    const auto& video = videos[static_cast<std::size_t>(pick_video(rng))];
    const auto sample = sample_training_frames(video.length(), config.aggregation_mode, config.frames_per_sample, rng);
    auto fwd = network_forward(video, sample.ref_frame, sample.frames, result.params, aggregate);
    auto ce = cross_entropy(fwd.scores, video.frame_labels(sample.ref_frame));
    const double lr = config.learning_rate_at(it);
    if (!std::isfinite(ce.loss))
      throw DivergenceError("training diverged at iteration " + std::to_string(it) + " (lr " + format_real(lr) +
                            "): loss is not finite");
    result.history.push_back({it, ce.loss, lr});
    if (lr == 0.0) continue;
    auto grad = network_backward(std::move(fwd.cache), ce.grad_scores, result.params);
    result.params.axpy(-lr, grad);
  }
  return result;
}

void write_loss_csv(std::ostream& os, const std::vector<LossRecord>& history) {
  os << "iteration,loss,lr\n";
  for (const auto& r : history) os << r.iteration << ',' << format_real(r.loss) << ',' << format_real(r.learning_rate) << '\n';
}

}  // namespace selsa
