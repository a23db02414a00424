#pragma once

#include "selsa/metrics.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace selsa {

enum class Rescore { Avg, Max };

std::string_view to_string(Rescore r);
std::optional<Rescore> parse_rescore(std::string_view s);

struct SeqNmsOptions {
  double link_iou = 0.5;
  Rescore rescore = Rescore::Avg;
  double nms_iou = 0.3;
};

struct LinkCandidate {
  BoundingBox box;
  double score = 0;
  bool active = true;
};

// A chain of boxes in consecutive frames: boxes[t] is the candidate index in
// frame start_frame + t.
struct Linkage {
  int start_frame = 0;
  std::vector<int> boxes;
  double total = 0;
};

// Maximum-total-score chain over active candidates, where consecutive boxes
// must overlap with IoU >= link_iou. Dynamic programming over frames.
// Returns nullopt when no candidate is active.
std::optional<Linkage> best_linkage(const std::vector<std::vector<LinkCandidate>>& frames, double link_iou);

// Greedy per-frame, per-class NMS; keeps the higher score when IoU > iou.
DetectionSet nms_per_frame(const DetectionSet& dets, double iou);

// Repeatedly extracts the best linkage per class, rescores its boxes to the
// linkage average (or max) and removes them from further linking; then
// applies per-frame NMS. Output boxes are a subset of the input boxes.
DetectionSet seq_nms(const DetectionSet& dets, const SeqNmsOptions& opts = {});

}  // namespace selsa
