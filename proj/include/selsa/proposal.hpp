#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selsa {

enum class Motion { Slow = 0, Medium = 1, Fast = 2 };

inline constexpr std::array<Motion, 3> kAllMotions = {Motion::Slow, Motion::Medium, Motion::Fast};

std::string_view to_string(Motion m);
std::optional<Motion> parse_motion(std::string_view s);

// Corner box (x1, y1, x2, y2) in continuous canvas units; area is
// (x2 - x1) * (y2 - y1) with no pixel +1 convention.
struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const { return x1 < x2 && y1 < y2; }

  BoundingBox translated(double dx, double dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct Proposal {
  Eigen::VectorXd feature;
  BoundingBox box;
  int frame_index = 0;
  int class_id = 0;    // num_classes means background
  int object_id = -1;  // -1 for background proposals
  Motion motion = Motion::Slow;
};

// Ground-truth object instance in one frame.
struct GroundTruth {
  int frame_index = 0;
  int object_id = 0;
  int class_id = 0;
  Motion motion = Motion::Slow;
  BoundingBox box;
};

struct Frame {
  std::vector<Proposal> proposals;
  std::vector<GroundTruth> objects;
};

struct VideoSequence {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Frame> frames;

  int length() const { return static_cast<int>(frames.size()); }
  int background_class() const { return num_classes; }

  // Proposal features of one frame stacked as rows.
  Eigen::MatrixXd frame_features(int frame) const;
  // Features of several frames stacked in the given order.
  Eigen::MatrixXd stacked_features(std::span<const int> frames) const;
  Eigen::VectorXi frame_labels(int frame) const;

  // Throws InputError if frames are ragged or features have the wrong size.
  void validate() const;
};

// Proposal dump: one row per proposal
//   frame_index,object_id,class_id,motion,x1,y1,x2,y2,f0..f{d-1}
void write_proposals_csv(std::ostream& os, const VideoSequence& video);
// Ground-truth sidecar: frame_index,object_id,class_id,motion,x1,y1,x2,y2
void write_ground_truth_csv(std::ostream& os, const VideoSequence& video);

// Rebuilds a sequence from the two CSV dumps; num_classes comes from the
// sidecar spec since the dump does not carry it.
VideoSequence read_video_csv(std::istream& proposals, std::istream& ground_truth, int num_classes);

// Shortest round-trippable decimal for a double.
std::string format_real(double v);

}  // namespace selsa
