#pragma once

#include "selsa/metrics.hpp"
#include "selsa/network.hpp"
#include "selsa/random.hpp"
#include "selsa/sampling.hpp"

namespace selsa {

struct DetectOptions {
  bool aggregate = true;  // false bypasses both SELSA blocks
  SamplingPlan plan;
  double score_threshold = 0.05;
};

// For every frame, runs the network with the frames chosen by the plan and
// emits one detection per proposal and foreground class whose softmax score
// reaches the threshold. No suppression is applied.
DetectionSet detect(const VideoSequence& video, const SelsaParams<double>& params, const DetectOptions& opts, Rng& rng);

}  // namespace selsa
