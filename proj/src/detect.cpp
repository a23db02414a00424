#include "selsa/detect.hpp"

#include "selsa/video_network.hpp"

namespace selsa {

DetectionSet detect(const VideoSequence& video, const SelsaParams<double>& params, const DetectOptions& opts, Rng& rng) {
  if (video.feature_dim != params.feature_dim())
    throw ConfigError("detect: video feature dim " + std::to_string(video.feature_dim) + " != parameter dim " +
                      std::to_string(params.feature_dim()));
  if (video.num_classes != params.num_classes())
    throw ConfigError("detect: video has " + std::to_string(video.num_classes) + " classes, parameters have " +
                      std::to_string(params.num_classes()));
  opts.plan.validate();

  DetectionSet out;
  const int fg = video.num_classes;
  for (int f = 0; f < video.length(); ++f) {
    std::vector<int> frames{f};
    if (opts.aggregate) frames = sample_frames(video.length(), f, opts.plan, rng);
    const auto fwd = network_forward(video, f, frames, params, opts.aggregate);
    const Matrix<double> prob = softmax_rows(fwd.scores);
    const auto& props = video.frames[static_cast<std::size_t>(f)].proposals;
    for (Eigen::Index i = 0; i < prob.rows(); ++i) {
      for (int c = 0; c < fg; ++c) {
        if (prob(i, c) >= opts.score_threshold) out.push_back({f, props[static_cast<std::size_t>(i)].box, c, prob(i, c)});
      }
    }
  }
  return out;
}

}  // namespace selsa
