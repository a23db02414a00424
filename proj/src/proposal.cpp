#include "selsa/proposal.hpp"

#include "selsa/errors.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace selsa {

std::string_view to_string(Motion m) {
  switch (m) {
    case Motion::Slow: return "slow";
    case Motion::Medium: return "medium";
    case Motion::Fast: return "fast";
  }
  return "slow";
}

std::optional<Motion> parse_motion(std::string_view s) {
  for (Motion m : kAllMotions) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

Eigen::MatrixXd VideoSequence::frame_features(int frame) const {
  const auto& props = frames.at(frame).proposals;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(props.size()), feature_dim);
  for (std::size_t i = 0; i < props.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = props[i].feature.transpose();
  return x;
}

Eigen::MatrixXd VideoSequence::stacked_features(std::span<const int> which) const {
  Eigen::Index rows = 0;
  for (int f : which) rows += static_cast<Eigen::Index>(frames.at(f).proposals.size());
  Eigen::MatrixXd x(rows, feature_dim);
  Eigen::Index r = 0;
  for (int f : which) {
    for (const auto& p : frames[f].proposals) x.row(r++) = p.feature.transpose();
  }
  return x;
}

Eigen::VectorXi VideoSequence::frame_labels(int frame) const {
  const auto& props = frames.at(frame).proposals;
  Eigen::VectorXi y(static_cast<Eigen::Index>(props.size()));
  for (std::size_t i = 0; i < props.size(); ++i) y(static_cast<Eigen::Index>(i)) = props[i].class_id;
  return y;
}

void VideoSequence::validate() const {
  if (frames.empty()) throw InputError("video has no frames");
  const std::size_t n = frames.front().proposals.size();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].proposals.size() != n)
      throw InputError("frame " + std::to_string(f) + " holds " + std::to_string(frames[f].proposals.size()) +
                       " proposals, expected " + std::to_string(n));
    for (const auto& p : frames[f].proposals) {
      if (p.feature.size() != feature_dim) throw InputError("feature dimension mismatch in frame " + std::to_string(f));
      if (p.frame_index != static_cast<int>(f)) throw InputError("non-consecutive frame index " + std::to_string(p.frame_index));
      if (p.class_id < 0 || p.class_id > num_classes) throw InputError("class id out of range: " + std::to_string(p.class_id));
    }
  }
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw IoError("cannot format value");
  return std::string(buf, end);
}

namespace {

void write_row_prefix(std::ostream& os, int frame, int object, int cls, Motion m, const BoundingBox& b) {
  os << frame << ',' << object << ',' << cls << ',' << to_string(m) << ',' << format_real(b.x1) << ','
     << format_real(b.y1) << ',' << format_real(b.x2) << ',' << format_real(b.y2);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_real(const std::string& s, int line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InputError("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InputError("line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

struct RowPrefix {
  int frame, object, cls;
  Motion motion;
  BoundingBox box;
};

RowPrefix parse_prefix(const std::vector<std::string>& cells, int line) {
  if (cells.size() < 8) throw InputError("line " + std::to_string(line) + ": expected at least 8 columns");
  auto motion = parse_motion(cells[3]);
  if (!motion) throw InputError("line " + std::to_string(line) + ": unknown motion '" + cells[3] + "'");
  RowPrefix r{parse_int(cells[0], line), parse_int(cells[1], line), parse_int(cells[2], line), *motion,
              {parse_real(cells[4], line), parse_real(cells[5], line), parse_real(cells[6], line),
               parse_real(cells[7], line)}};
  if (!r.box.valid()) throw InputError("line " + std::to_string(line) + ": degenerate box");
  if (r.frame < 0) throw InputError("line " + std::to_string(line) + ": negative frame index");
  return r;
}

}  // namespace

void write_proposals_csv(std::ostream& os, const VideoSequence& video) {
  os << "frame_index,object_id,class_id,motion,x1,y1,x2,y2";
  for (int k = 0; k < video.feature_dim; ++k) os << ",f" << k;
  os << '\n';
  for (const auto& frame : video.frames) {
    for (const auto& p : frame.proposals) {
      write_row_prefix(os, p.frame_index, p.object_id, p.class_id, p.motion, p.box);
      for (Eigen::Index k = 0; k < p.feature.size(); ++k) os << ',' << format_real(p.feature(k));
      os << '\n';
    }
  }
}

void write_ground_truth_csv(std::ostream& os, const VideoSequence& video) {
  os << "frame_index,object_id,class_id,motion,x1,y1,x2,y2\n";
  for (const auto& frame : video.frames) {
    for (const auto& g : frame.objects) {
      write_row_prefix(os, g.frame_index, g.object_id, g.class_id, g.motion, g.box);
      os << '\n';
    }
  }
}

VideoSequence read_video_csv(std::istream& proposals, std::istream& ground_truth, int num_classes) {
  VideoSequence video;
  video.num_classes = num_classes;
  std::string line;
  if (!std::getline(proposals, line)) throw InputError("empty proposal CSV");
  video.feature_dim = static_cast<int>(split_csv(line).size()) - 8;
  if (video.feature_dim < 1) throw InputError("proposal CSV header has no feature columns");

  std::map<int, Frame> frames;
  int line_no = 1;
  while (std::getline(proposals, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 8 + video.feature_dim)
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(8 + video.feature_dim) +
                       " columns");
    auto r = parse_prefix(cells, line_no);
    Proposal p;
    p.frame_index = r.frame;
    p.object_id = r.object;
    p.class_id = r.cls;
    p.motion = r.motion;
    p.box = r.box;
    p.feature.resize(video.feature_dim);
    for (int k = 0; k < video.feature_dim; ++k) p.feature(k) = parse_real(cells[8 + k], line_no);
    frames[r.frame].proposals.push_back(std::move(p));
  }

  if (!std::getline(ground_truth, line)) throw InputError("empty ground-truth CSV");
  line_no = 1;
  while (std::getline(ground_truth, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto r = parse_prefix(split_csv(line), line_no);
    frames[r.frame].objects.push_back({r.frame, r.object, r.cls, r.motion, r.box});
  }

  int expected = 0;
  for (auto& [index, frame] : frames) {
    if (index != expected++) throw InputError("frame indices are not consecutive at " + std::to_string(index));
    video.frames.push_back(std::move(frame));
  }
  video.validate();
  return video;
}

}  // namespace selsa
