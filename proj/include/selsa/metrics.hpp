#pragma once

#include "selsa/proposal.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace selsa {

struct Detection {
  int frame_index = 0;
  BoundingBox box;
  int class_id = 0;  // foreground only, [0, C)
  double score = 0;
};

using DetectionSet = std::vector<Detection>;

// frame_index,class_id,score,x1,y1,x2,y2
void write_detections_csv(std::ostream& os, const DetectionSet& dets);
DetectionSet read_detections_csv(std::istream& is);

struct ApOptions {
  double iou_threshold = 0.5;
  // Motion-split evaluation: detections matched to ground truth of another
  // split are ignored (true) or counted as false positives (false).
  bool ignore_other_splits = true;
};

struct ApResult {
  std::vector<std::optional<double>> per_class;  // empty optional: no ground truth
  std::optional<double> map;                     // mean over classes that have ground truth
  int true_positives = 0;
  int false_positives = 0;
  int ground_truth = 0;
};

// Average precision per class with all-point interpolation. Detections are
// matched greedily in descending score order to the unmatched ground truth
// box of the same frame and class with the highest IoU >= threshold.
// dets[v] holds the detections of videos[v].
ApResult ap_at_iou(std::span<const DetectionSet> dets, std::span<const VideoSequence> videos, const ApOptions& opts = {});
ApResult ap_at_iou(const DetectionSet& dets, const VideoSequence& video, const ApOptions& opts = {});

// ap_at_iou restricted to the ground truth of each motion category, indexed
// by Motion. Matching is done once against all ground truth.
std::array<ApResult, 3> motion_split_map(std::span<const DetectionSet> dets, std::span<const VideoSequence> videos,
                                         const ApOptions& opts = {});

// Area under the all-point interpolated precision/recall curve, for
// detections already sorted by descending score. is_tp[i] says whether
// detection i is a true positive.
double average_precision(const std::vector<bool>& is_tp, int n_ground_truth);

}  // namespace selsa
