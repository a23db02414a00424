#pragma once

#include "selsa/proposal.hpp"
#include "selsa/random.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace selsa {

// Recipe for a reproducible multi-shot synthetic video.
struct SyntheticSpec {
  int n_classes = 5;
  int feature_dim = 16;
  int n_frames = 60;
  int proposals_per_frame = 8;
  int n_objects_per_video = 4;
  // Noise std per motion category, indexed by Motion.
  std::array<double, 3> degradation_sigma = {0.1, 0.3, 0.8};
  // Per-frame box random-walk step (std, canvas units), indexed by Motion.
  std::array<double, 3> motion_step = {0.5, 1.5, 3.0};
  // AR(1) coefficient of a track's appearance deviation between consecutive
  // frames. 0 gives i.i.d. degradation per frame.
  double temporal_correlation = 0.7;
  // Share of the degradation variance drawn independently for every
  // proposal instead of per track and frame. Total variance stays sigma^2.
  double proposal_noise_share = 0.5;
  double pose_angle_max = 0.5;
  double background_fraction = 0.25;
  double canvas_width = 100;
  double canvas_height = 100;
  // Proposal boxes are ground truth moved by up to this fraction of the box
  // size on every coordinate.
  double box_jitter = 0.1;
  std::uint64_t seed = 0;

  double sigma(Motion m) const { return degradation_sigma[static_cast<int>(m)]; }
  int n_background() const;
  int n_foreground() const { return proposals_per_frame - n_background(); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// One unit-norm feature per class with pairwise inner products <= 0.5.
using PrototypeSet = std::vector<Eigen::VectorXd>;

PrototypeSet make_prototypes(const SyntheticSpec& spec);

// Rotates `feature` by a uniform angle in [-angle, angle] within a random
// coordinate plane, then adds i.i.d. N(0, sigma^2) noise.
Eigen::VectorXd degrade(const Eigen::VectorXd& feature, double sigma, double angle, Rng& rng);

// Video `video_index` of the dataset described by spec; prototypes are shared
// across all videos of one spec.
VideoSequence generate_video(const SyntheticSpec& spec, const PrototypeSet& prototypes, int video_index);
VideoSequence generate_video(const SyntheticSpec& spec);

std::vector<VideoSequence> generate_dataset(const SyntheticSpec& spec, int first_index, int count);

}  // namespace selsa
