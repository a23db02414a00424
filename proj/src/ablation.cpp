#include "selsa/ablation.hpp"

#include "selsa/parallel.hpp"

#include <ostream>

namespace selsa {

void EvalConfig::validate() const {
  if (!(score_threshold >= 0)) throw ConfigError("eval.score_threshold: must be >= 0");
  if (!(iou_threshold > 0 && iou_threshold < 1)) throw ConfigError("eval.iou_threshold: must be in (0, 1)");
  if (!(nms_iou > 0 && nms_iou <= 1)) throw ConfigError("eval.nms_iou: must be in (0, 1]");
  full_sequence_plan.validate();
  for (int k : consecutive_counts)
    if (k < 1) throw ConfigError("eval.consecutive_counts: entries must be >= 1");
  for (int k : shuffled_counts)
    if (k < 1) throw ConfigError("eval.shuffled_counts: entries must be >= 1");
  for (int s : strides)
    if (s < 1) throw ConfigError("eval.strides: entries must be >= 1");
  if (stride_frames < 1) throw ConfigError("eval.stride_frames: must be >= 1");
  if (!(seq_nms_options.link_iou > 0 && seq_nms_options.link_iou <= 1))
    throw ConfigError("seq_nms.link_iou: must be in (0, 1]");
  if (!(seq_nms_options.nms_iou > 0 && seq_nms_options.nms_iou <= 1))
    throw ConfigError("seq_nms.nms_iou: must be in (0, 1]");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
}

std::optional<double> AblationResults::find(const std::string& experiment, const std::string& metric,
                                            const std::string& split) const {
  for (const auto& r : rows)
    if (r.experiment == experiment && r.metric == metric && r.split == split) return r.value;
  return std::nullopt;
}

SplitScores evaluate_detector(const SelsaParams<double>& params, const std::vector<VideoSequence>& videos,
                              const DetectOptions& opts, bool use_seq_nms, const EvalConfig& config) {
  std::vector<DetectionSet> dets(videos.size());
  parallel_for(static_cast<int>(videos.size()), config.threads, [&](int v) {
    Rng rng = make_rng(config.seed, 0xde7ec7 + static_cast<std::uint64_t>(v));
    auto raw = detect(videos[static_cast<std::size_t>(v)], params, opts, rng);
    dets[static_cast<std::size_t>(v)] =
        use_seq_nms ? seq_nms(raw, config.seq_nms_options) : nms_per_frame(raw, config.nms_iou);
  });
  ApOptions ap{config.iou_threshold, config.ignore_other_splits};
  return {ap_at_iou(dets, videos, ap), motion_split_map(dets, videos, ap)};
}

namespace {

void add_split_rows(AblationResults& out, const std::string& experiment, const SplitScores& s) {
  out.rows.push_back({experiment, "mAP", "all", s.overall.map});
  for (Motion m : kAllMotions)
    out.rows.push_back({experiment, "mAP", std::string(to_string(m)), s.by_motion[static_cast<std::size_t>(m)].map});
  for (std::size_t c = 0; c < s.overall.per_class.size(); ++c)
    out.rows.push_back({experiment, "AP", "class_" + std::to_string(c), s.overall.per_class[c]});
}

std::optional<double> delta(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

}  // namespace

AblationResults ablation_suite(const std::map<AggregationMode, SelsaParams<double>>& params,
                               const std::vector<VideoSequence>& videos, const EvalConfig& config) {
  config.validate();
  if (videos.empty()) throw ConfigError("ablation_suite: no evaluation videos");
  AblationResults out;

  auto options_for = [&](AggregationMode mode) {
    DetectOptions o;
    o.score_threshold = config.score_threshold;
    o.aggregate = mode != AggregationMode::None;
    o.plan = mode == AggregationMode::FullSequence ? config.full_sequence_plan
                                                    : SamplingPlan{SamplingMode::Consecutive, 1, 1};
    return o;
  };

  std::optional<SplitScores> full;
  for (auto mode : {AggregationMode::None, AggregationMode::WithinFrame, AggregationMode::FullSequence}) {
    auto it = params.find(mode);
    if (it == params.end()) continue;
    auto s = evaluate_detector(it->second, videos, options_for(mode), false, config);
    add_split_rows(out, "mode_" + std::string(to_string(mode)), s);
    if (mode == AggregationMode::FullSequence) full = s;
  }

  auto it = params.find(AggregationMode::FullSequence);
  if (it == params.end()) return out;
  const auto& fs = it->second;

  auto curve = [&](const std::string& name, const std::string& prefix, const std::vector<int>& xs, auto make_plan) {
    Curve c{name, {}};
    for (int x : xs) {
      DetectOptions o = options_for(AggregationMode::FullSequence);
      o.plan = make_plan(x);
      auto s = evaluate_detector(fs, videos, o, false, config);
      add_split_rows(out, prefix + std::to_string(x), s);
      c.points.emplace_back(x, s.overall.map.value_or(0.0));
    }
    out.curves.push_back(std::move(c));
  };
  curve("consecutive_frames", "consecutive_k", config.consecutive_counts,
        [](int k) { return SamplingPlan{SamplingMode::Consecutive, k, 1}; });
  curve("stride", "strided_s", config.strides,
        [&](int s) { return SamplingPlan{SamplingMode::Strided, config.stride_frames, s}; });
  curve("shuffled_frames", "shuffled_k", config.shuffled_counts,
        [](int k) { return SamplingPlan{SamplingMode::Shuffled, k, 1}; });

  if (config.seq_nms && full) {
    auto s = evaluate_detector(fs, videos, options_for(AggregationMode::FullSequence), true, config);
    add_split_rows(out, "mode_full_sequence+seq_nms", s);
    out.rows.push_back({"seq_nms_delta", "mAP", "all", delta(s.overall.map, full->overall.map)});
    for (Motion m : kAllMotions) {
      const auto k = static_cast<std::size_t>(m);
      out.rows.push_back({"seq_nms_delta", "mAP", std::string(to_string(m)), delta(s.by_motion[k].map, full->by_motion[k].map)});
    }
  }
  return out;
}

void write_results_csv(std::ostream& os, const AblationResults& results) {
  os << "experiment,metric,split,value\n";
  for (const auto& r : results.rows)
    os << r.experiment << ',' << r.metric << ',' << r.split << ',' << (r.value ? format_real(*r.value) : "absent") << '\n';
}

void write_curve_csv(std::ostream& os, const Curve& curve) {
  os << "x,y\n";
  for (const auto& [x, y] : curve.points) os << format_real(x) << ',' << format_real(y) << '\n';
}

}  // namespace selsa
