#include "selsa/metrics.hpp"

#include "selsa/errors.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <set>
#include <tuple>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace selsa {

void write_detections_csv(std::ostream& os, const DetectionSet& dets) {
  os << "frame_index,class_id,score,x1,y1,x2,y2\n";
  for (const auto& d : dets) {
    os << d.frame_index << ',' << d.class_id << ',' << format_real(d.score) << ',' << format_real(d.box.x1) << ','
       << format_real(d.box.y1) << ',' << format_real(d.box.x2) << ',' << format_real(d.box.y2) << '\n';
  }
}

DetectionSet read_detections_csv(std::istream& is) {
  DetectionSet out;
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty detection CSV");
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw InputError("detection CSV line " + std::to_string(line_no) + ": expected 7 columns");
    Detection d;
    double v[5];
    auto parse = [&](const std::string& s, auto& dst) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), dst);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("detection CSV line " + std::to_string(line_no) + ": bad value '" + s + "'");
    };
    parse(cells[0], d.frame_index);
    parse(cells[1], d.class_id);
    for (int k = 0; k < 5; ++k) parse(cells[static_cast<std::size_t>(k) + 2], v[k]);
    d.score = v[0];
    d.box = {v[1], v[2], v[3], v[4]};
    out.push_back(d);
  }
  return out;
}

double average_precision(const std::vector<bool>& is_tp, int n_ground_truth) {
  if (n_ground_truth <= 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / n_ground_truth;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: max precision at any recall >= r.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

namespace {

struct GtRef {
  int video, frame, index;  // index into frame.objects
};

struct ScoredDet {
  int video;
  std::size_t index;  // into dets[video]
  double score;
};

// Greedy matching per (video, frame, class); returns for every detection
// the matched ground truth (or nullopt), in the global per-class score order.
struct ClassMatches {
  std::vector<ScoredDet> order;
  std::vector<std::optional<GtRef>> matched;
};

std::vector<ClassMatches> match_all(std::span<const DetectionSet> dets, std::span<const VideoSequence> videos,
                                    int num_classes, double iou_threshold) {
  std::vector<ClassMatches> out(static_cast<std::size_t>(num_classes));
  for (int v = 0; v < static_cast<int>(dets.size()); ++v) {
    for (std::size_t i = 0; i < dets[v].size(); ++i) {
      const auto& d = dets[v][i];
      if (d.class_id < 0 || d.class_id >= num_classes)
        throw InputError("detection class " + std::to_string(d.class_id) + " is not a foreground class");
      if (d.frame_index < 0 || d.frame_index >= videos[v].length())
        throw InputError("detection frame " + std::to_string(d.frame_index) + " outside the video");
      out[static_cast<std::size_t>(d.class_id)].order.push_back({v, i, d.score});
    }
  }

  for (int c = 0; c < num_classes; ++c) {
    auto& cm = out[static_cast<std::size_t>(c)];
    std::stable_sort(cm.order.begin(), cm.order.end(),
                     [](const ScoredDet& a, const ScoredDet& b) { return a.score > b.score; });
    cm.matched.assign(cm.order.size(), std::nullopt);
    std::set<std::tuple<int, int, int>> taken;  // (video, frame, gt index)
    for (std::size_t k = 0; k < cm.order.size(); ++k) {
      const auto& sd = cm.order[k];
      const auto& d = dets[sd.video][sd.index];
      const auto& objects = videos[sd.video].frames[static_cast<std::size_t>(d.frame_index)].objects;
      double best = -1;
      int best_g = -1;
      for (int g = 0; g < static_cast<int>(objects.size()); ++g) {
        if (objects[static_cast<std::size_t>(g)].class_id != c) continue;
        if (taken.count({sd.video, d.frame_index, g})) continue;
        const double o = iou(d.box, objects[static_cast<std::size_t>(g)].box);
        if (o >= iou_threshold && o > best) {
          best = o;
          best_g = g;
        }
      }
      if (best_g >= 0) {
        taken.insert({sd.video, d.frame_index, best_g});
        cm.matched[k] = GtRef{sd.video, d.frame_index, best_g};
      }
    }
  }
  return out;
}

int infer_num_classes(std::span<const VideoSequence> videos) {
  if (videos.empty()) throw ConfigError("ap_at_iou: no videos");
  const int c = videos.front().num_classes;
  for (const auto& v : videos)
    if (v.num_classes != c) throw ConfigError("ap_at_iou: videos disagree on class count");
  return c;
}

// Evaluates against the ground truth accepted by `in_split`.
template <typename Pred>
ApResult evaluate(const std::vector<ClassMatches>& matches, std::span<const VideoSequence> videos, int num_classes,
                  Pred in_split, bool ignore_other) {
  ApResult r;
  r.per_class.assign(static_cast<std::size_t>(num_classes), std::nullopt);
  double sum = 0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    int npos = 0;
    for (const auto& v : videos)
      for (const auto& f : v.frames)
        for (const auto& g : f.objects)
          if (g.class_id == c && in_split(g)) ++npos;

    const auto& cm = matches[static_cast<std::size_t>(c)];
    std::vector<bool> is_tp;
    for (std::size_t k = 0; k < cm.order.size(); ++k) {
      if (cm.matched[k]) {
        const auto& ref = *cm.matched[k];
        const auto& g = videos[ref.video].frames[static_cast<std::size_t>(ref.frame)].objects[static_cast<std::size_t>(ref.index)];
        if (in_split(g)) {
          is_tp.push_back(true);
          ++r.true_positives;
          continue;
        }
        if (ignore_other) continue;
      }
      is_tp.push_back(false);
      ++r.false_positives;
    }
    r.ground_truth += npos;
    if (npos == 0) continue;
    const double ap = average_precision(is_tp, npos);
    r.per_class[static_cast<std::size_t>(c)] = ap;
    sum += ap;
    ++present;
  }
  if (present > 0) r.map = sum / present;
  return r;
}

}  // namespace

ApResult ap_at_iou(std::span<const DetectionSet> dets, std::span<const VideoSequence> videos, const ApOptions& opts) {
  if (dets.size() != videos.size()) throw ConfigError("ap_at_iou: one detection set per video required");
  if (!(opts.iou_threshold > 0 && opts.iou_threshold < 1)) throw ConfigError("ap_at_iou: iou threshold must be in (0, 1)");
  const int c = infer_num_classes(videos);
  const auto matches = match_all(dets, videos, c, opts.iou_threshold);
  return evaluate(matches, videos, c, [](const GroundTruth&) { return true; }, false);
}

ApResult ap_at_iou(const DetectionSet& dets, const VideoSequence& video, const ApOptions& opts) {
  return ap_at_iou(std::span<const DetectionSet>(&dets, 1), std::span<const VideoSequence>(&video, 1), opts);
}

std::array<ApResult, 3> motion_split_map(std::span<const DetectionSet> dets, std::span<const VideoSequence> videos,
                                         const ApOptions& opts) {
  if (dets.size() != videos.size()) throw ConfigError("motion_split_map: one detection set per video required");
  if (!(opts.iou_threshold > 0 && opts.iou_threshold < 1))
    throw ConfigError("motion_split_map: iou threshold must be in (0, 1)");
  const int c = infer_num_classes(videos);
  const auto matches = match_all(dets, videos, c, opts.iou_threshold);
  std::array<ApResult, 3> out;
  for (Motion m : kAllMotions) {
    out[static_cast<std::size_t>(m)] =
        evaluate(matches, videos, c, [m](const GroundTruth& g) { return g.motion == m; }, opts.ignore_other_splits);
  }
  return out;
}

}  // namespace selsa
