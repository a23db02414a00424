#pragma once

#include "selsa/detect.hpp"
#include "selsa/seq_nms.hpp"
#include "selsa/training.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace selsa {

struct EvalConfig {
  double score_threshold = 0.05;
  double iou_threshold = 0.5;
  double nms_iou = 0.3;  // per-frame NMS used when Seq-NMS is off
  bool ignore_other_splits = true;

  // Test plan for FullSequence-trained parameters; WithinFrame uses the
  // reference frame alone and None bypasses aggregation.
  SamplingPlan full_sequence_plan{SamplingMode::Shuffled, 21, 1};

  std::vector<int> consecutive_counts = {1, 5, 9, 13, 17, 21};
  int stride_frames = 21;
  std::vector<int> strides = {1, 2, 4, 6, 8, 10};
  std::vector<int> shuffled_counts = {1, 5, 9, 13, 17, 21};

  bool seq_nms = false;
  SeqNmsOptions seq_nms_options;

  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct ResultRow {
  std::string experiment;
  std::string metric;
  std::string split;
  std::optional<double> value;  // empty: split or class absent
};

struct Curve {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, mAP)
};

struct AblationResults {
  std::vector<ResultRow> rows;
  std::vector<Curve> curves;

  std::optional<double> find(const std::string& experiment, const std::string& metric, const std::string& split) const;
};

struct SplitScores {
  ApResult overall;
  std::array<ApResult, 3> by_motion;
};

// Detection over a video set followed by per-frame NMS or Seq-NMS.
SplitScores evaluate_detector(const SelsaParams<double>& params, const std::vector<VideoSequence>& videos,
                              const DetectOptions& opts, bool use_seq_nms, const EvalConfig& config);

// Aggregation-mode and frame-sampling experiments over whichever modes have parameters:
//   mode_<mode>                  mAP per split and AP per class
//   consecutive_k<k>, strided_s<s>, shuffled_k<k>   (FullSequence params)
//   mode_full_sequence+seq_nms and seq_nms_delta    (when config.seq_nms)
AblationResults ablation_suite(const std::map<AggregationMode, SelsaParams<double>>& params,
                               const std::vector<VideoSequence>& videos, const EvalConfig& config);

// experiment,metric,split,value ("absent" when undefined)
void write_results_csv(std::ostream& os, const AblationResults& results);
// x,y
void write_curve_csv(std::ostream& os, const Curve& curve);

}  // namespace selsa
