#pragma once

#include "selsa/random.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace selsa {

enum class SamplingMode { Consecutive, Strided, Shuffled };

std::string_view to_string(SamplingMode m);
std::optional<SamplingMode> parse_sampling_mode(std::string_view s);

// Inference-time choice of aggregation frames around a reference frame.
struct SamplingPlan {
  SamplingMode mode = SamplingMode::Shuffled;
  int k_frames = 21;
  int stride = 1;  // used by Strided only

  void validate() const;
};

// Returns min(k, n_frames) distinct sorted frame indices that include ref.
//
// Consecutive and Strided take a window of k positions {ref + i*step}
// centred on ref; a window that runs past either end is shifted inward.
// When fewer than k strided positions fit in the video, the remaining slots
// are filled with the unused frames closest to ref (earlier frame first on
// ties). Shuffled adds k - 1 frames drawn uniformly without replacement.
std::vector<int> sample_frames(int n_frames, int ref, const SamplingPlan& plan, Rng& rng);

}  // namespace selsa
