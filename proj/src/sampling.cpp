#include "selsa/sampling.hpp"

#include "selsa/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace selsa {

std::string_view to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::Consecutive: return "consecutive";
    case SamplingMode::Strided: return "strided";
    case SamplingMode::Shuffled: return "shuffled";
  }
  return "consecutive";
}

std::optional<SamplingMode> parse_sampling_mode(std::string_view s) {
  for (auto m : {SamplingMode::Consecutive, SamplingMode::Strided, SamplingMode::Shuffled})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

void SamplingPlan::validate() const {
  if (k_frames < 1) throw ConfigError("sampling plan: k_frames must be >= 1");
  if (stride < 1) throw ConfigError("sampling plan: stride must be >= 1");
}

namespace {

std::vector<int> strided_window(int n_frames, int ref, int k, int step) {
  // Positions ref + i*step for i in [i_min, i_max] lie inside the video.
  const int i_min = -(ref / step);
  const int i_max = (n_frames - 1 - ref) / step;
  const int available = i_max - i_min + 1;
  const int take = std::min(k, available);
  int lo = -((take - 1) / 2);
  lo = std::max(lo, i_min);
  lo = std::min(lo, i_max - take + 1);

  std::vector<int> frames;
  for (int i = lo; i < lo + take; ++i) frames.push_back(ref + i * step);

  const int target = std::min(k, n_frames);
  if (static_cast<int>(frames.size()) < target) {
    std::vector<bool> used(static_cast<std::size_t>(n_frames), false);
    for (int f : frames) used[static_cast<std::size_t>(f)] = true;
    for (int dist = 1; static_cast<int>(frames.size()) < target; ++dist) {
      for (int f : {ref - dist, ref + dist}) {
        if (f < 0 || f >= n_frames || used[static_cast<std::size_t>(f)]) continue;
        if (static_cast<int>(frames.size()) == target) break;
        used[static_cast<std::size_t>(f)] = true;
        frames.push_back(f);
      }
    }
  }
  return frames;
}

}  // namespace

std::vector<int> sample_frames(int n_frames, int ref, const SamplingPlan& plan, Rng& rng) {
  plan.validate();
  if (ref < 0 || ref >= n_frames)
    throw ConfigError("sample_frames: reference " + std::to_string(ref) + " outside [0, " + std::to_string(n_frames) + ")");

  std::vector<int> frames;
  switch (plan.mode) {
    case SamplingMode::Consecutive: frames = strided_window(n_frames, ref, plan.k_frames, 1); break;
    case SamplingMode::Strided: frames = strided_window(n_frames, ref, plan.k_frames, plan.stride); break;
    case SamplingMode::Shuffled: {
      const int extras = std::min(plan.k_frames, n_frames) - 1;
      std::vector<int> others;
      for (int f = 0; f < n_frames; ++f)
        if (f != ref) others.push_back(f);
      frames.push_back(ref);
      for (int k = 0; k < extras; ++k) {
        std::uniform_int_distribution<int> j(k, static_cast<int>(others.size()) - 1);
        std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(j(rng))]);
        frames.push_back(others[static_cast<std::size_t>(k)]);
      }
      break;
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

}  // namespace selsa
