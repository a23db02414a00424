#include "selsa/seq_nms.hpp"

#include "selsa/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace selsa {

std::string_view to_string(Rescore r) { return r == Rescore::Avg ? "avg" : "max"; }

std::optional<Rescore> parse_rescore(std::string_view s) {
  if (s == "avg") return Rescore::Avg;
  if (s == "max") return Rescore::Max;
  return std::nullopt;
}

std::optional<Linkage> best_linkage(const std::vector<std::vector<LinkCandidate>>& frames, double link_iou) {
  const int n_frames = static_cast<int>(frames.size());
  // best[f][i]: best chain total ending at candidate i of frame f.
  std::vector<std::vector<double>> best(frames.size());
  std::vector<std::vector<int>> back(frames.size());

  double top = 0;
  int top_frame = -1, top_box = -1;
  for (int f = 0; f < n_frames; ++f) {
    const auto& cur = frames[static_cast<std::size_t>(f)];
    best[static_cast<std::size_t>(f)].assign(cur.size(), 0.0);
    back[static_cast<std::size_t>(f)].assign(cur.size(), -1);
    for (int i = 0; i < static_cast<int>(cur.size()); ++i) {
      if (!cur[static_cast<std::size_t>(i)].active) continue;
      double prev = 0;
      int arg = -1;
      if (f > 0) {
        const auto& before = frames[static_cast<std::size_t>(f - 1)];
        for (int j = 0; j < static_cast<int>(before.size()); ++j) {
          if (!before[static_cast<std::size_t>(j)].active) continue;
          if (iou(before[static_cast<std::size_t>(j)].box, cur[static_cast<std::size_t>(i)].box) < link_iou) continue;
          const double v = best[static_cast<std::size_t>(f - 1)][static_cast<std::size_t>(j)];
          if (arg < 0 || v > prev) {
            prev = v;
            arg = j;
          }
        }
        // Start a fresh chain unless the predecessor adds positive score.
        if (arg < 0 || prev <= 0) {
          arg = -1;
          prev = 0;
        }
      }
      const double total = prev + cur[static_cast<std::size_t>(i)].score;
      best[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] = total;
      back[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] = arg;
      if (top_frame < 0 || total > top) {
        top = total;
        top_frame = f;
        top_box = i;
      }
    }
  }
  if (top_frame < 0) return std::nullopt;

  Linkage link;
  link.total = top;
  int f = top_frame, i = top_box;
  while (i >= 0) {
    link.boxes.push_back(i);
    const int j = back[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)];
    if (j < 0) break;
    i = j;
    --f;
  }
  link.start_frame = f;
  std::reverse(link.boxes.begin(), link.boxes.end());
  return link;
}

DetectionSet nms_per_frame(const DetectionSet& dets, double iou_threshold) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) groups[{dets[i].frame_index, dets[i].class_id}].push_back(i);

  std::vector<bool> keep(dets.size(), false);
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<std::size_t> kept;
    for (auto i : idx) {
      bool suppressed = false;
      for (auto k : kept) {
        if (iou(dets[i].box, dets[k].box) > iou_threshold) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) {
        kept.push_back(i);
        keep[i] = true;
      }
    }
  }
  DetectionSet out;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (keep[i]) out.push_back(dets[i]);
  return out;
}

DetectionSet seq_nms(const DetectionSet& dets, const SeqNmsOptions& opts) {
  if (dets.empty()) return {};
  int n_frames = 0;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].frame_index < 0) throw InputError("seq_nms: negative frame index");
    n_frames = std::max(n_frames, dets[i].frame_index + 1);
    by_class[dets[i].class_id].push_back(i);
  }

  DetectionSet rescored = dets;
  for (const auto& [cls, members] : by_class) {
    std::vector<std::vector<LinkCandidate>> frames(static_cast<std::size_t>(n_frames));
    std::vector<std::vector<std::size_t>> source(static_cast<std::size_t>(n_frames));
    for (auto i : members) {
      const auto f = static_cast<std::size_t>(dets[i].frame_index);
      frames[f].push_back({dets[i].box, dets[i].score, true});
      source[f].push_back(i);
    }
    std::size_t remaining = members.size();
    while (remaining > 0) {
      auto link = best_linkage(frames, opts.link_iou);
      if (!link) break;
      double value = 0;
      for (std::size_t t = 0; t < link->boxes.size(); ++t) {
        const double s = frames[static_cast<std::size_t>(link->start_frame) + t][static_cast<std::size_t>(link->boxes[t])].score;
        value = opts.rescore == Rescore::Avg ? value + s : (t == 0 ? s : std::max(value, s));
      }
      if (opts.rescore == Rescore::Avg) value /= static_cast<double>(link->boxes.size());
      for (std::size_t t = 0; t < link->boxes.size(); ++t) {
        const auto f = static_cast<std::size_t>(link->start_frame) + t;
        const auto b = static_cast<std::size_t>(link->boxes[t]);
        frames[f][b].active = false;
        rescored[source[f][b]].score = value;
        --remaining;
      }
    }
  }
  return nms_per_frame(rescored, opts.nms_iou);
}

}  // namespace selsa
