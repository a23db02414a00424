#pragma once

#include "selsa/network.hpp"
#include "selsa/proposal.hpp"

#include <span>
#include <vector>

namespace selsa {

// Pool order used by the network: reference frame first, then the remaining
// frames of the aggregation set in ascending order.
std::vector<int> pool_order(int ref_frame, std::span<const int> frames);

// Runs the network on one reference frame of `video`, aggregating over the
// proposals of every frame in `frames` (which must contain ref_frame).
ForwardResult<double> network_forward(const VideoSequence& video, int ref_frame, std::span<const int> frames,
                                      const SelsaParams<double>& params, bool aggregate = true);

}  // namespace selsa
