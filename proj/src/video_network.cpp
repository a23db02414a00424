#include "selsa/video_network.hpp"

#include <algorithm>

namespace selsa {

std::vector<int> pool_order(int ref_frame, std::span<const int> frames) {
  std::vector<int> order{ref_frame};
  std::vector<int> rest;
  for (int f : frames)
    if (f != ref_frame) rest.push_back(f);
  std::sort(rest.begin(), rest.end());
  rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
  order.insert(order.end(), rest.begin(), rest.end());
  return order;
}

ForwardResult<double> network_forward(const VideoSequence& video, int ref_frame, std::span<const int> frames,
                                      const SelsaParams<double>& params, bool aggregate) {
  if (frames.empty()) throw ConfigError("network_forward: empty aggregation frame set");
  if (ref_frame < 0 || ref_frame >= video.length()) throw ConfigError("network_forward: reference frame out of range");
  if (std::find(frames.begin(), frames.end(), ref_frame) == frames.end())
    throw ConfigError("network_forward: aggregation frame set must contain the reference frame");
  for (int f : frames)
    if (f < 0 || f >= video.length()) throw ConfigError("network_forward: frame " + std::to_string(f) + " out of range");

  const auto n_ref = static_cast<Eigen::Index>(video.frames[static_cast<std::size_t>(ref_frame)].proposals.size());
  if (!aggregate) return network_forward<double>(video.frame_features(ref_frame), n_ref, params, false);
  const auto order = pool_order(ref_frame, frames);
  return network_forward<double>(video.stacked_features(order), n_ref, params, true);
}

}  // namespace selsa
