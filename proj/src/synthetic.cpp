#include "selsa/synthetic.hpp"

#include "selsa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace selsa {

int SyntheticSpec::n_background() const {
  return static_cast<int>(std::lround(background_fraction * proposals_per_frame));
}

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("synthetic." + key + ": " + why); };
  if (n_classes < 2) fail("n_classes", "must be >= 2");
  if (feature_dim < 2) fail("feature_dim", "must be >= 2");
  if (n_frames < 1) fail("n_frames", "must be >= 1");
  if (proposals_per_frame < 1) fail("proposals_per_frame", "must be >= 1");
  if (n_objects_per_video < 1) fail("n_objects_per_video", "must be >= 1");
  for (double s : degradation_sigma)
    if (!(s >= 0)) fail("degradation_sigma", "must be non-negative");
  if (!(degradation_sigma[0] <= degradation_sigma[1] && degradation_sigma[1] <= degradation_sigma[2]))
    fail("degradation_sigma", "must satisfy slow <= medium <= fast");
  for (double s : motion_step)
    if (!(s >= 0)) fail("motion_step", "must be non-negative");
  if (!(temporal_correlation >= 0 && temporal_correlation < 1)) fail("temporal_correlation", "must be in [0, 1)");
  if (!(proposal_noise_share >= 0 && proposal_noise_share <= 1)) fail("proposal_noise_share", "must be in [0, 1]");
  if (!(pose_angle_max >= 0)) fail("pose_angle_max", "must be non-negative");
  if (!(background_fraction >= 0 && background_fraction < 1)) fail("background_fraction", "must be in [0, 1)");
  if (!(canvas_width > 0 && canvas_height > 0)) fail("canvas", "must have positive size");
  if (!(box_jitter >= 0 && box_jitter < 0.5)) fail("box_jitter", "must be in [0, 0.5)");
}

PrototypeSet make_prototypes(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, 0);
  std::normal_distribution<double> normal;
  PrototypeSet protos;
  constexpr int kMaxAttempts = 100000;
  for (int c = 0; c < spec.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Eigen::VectorXd v(spec.feature_dim);
      for (int k = 0; k < spec.feature_dim; ++k) v(k) = normal(rng);
      v.normalize();
      placed = std::all_of(protos.begin(), protos.end(), [&](const Eigen::VectorXd& p) { return p.dot(v) <= 0.5; });
      if (placed) protos.push_back(std::move(v));
    }
    if (!placed)
      throw ConfigError("synthetic.n_classes: cannot place " + std::to_string(spec.n_classes) +
                        " prototypes with pairwise inner product <= 0.5 in dimension " +
                        std::to_string(spec.feature_dim));
  }
  return protos;
}

Eigen::VectorXd degrade(const Eigen::VectorXd& feature, double sigma, double angle, Rng& rng) {
  Eigen::VectorXd out = feature;
  const auto d = static_cast<int>(feature.size());
  if (d >= 2) {
    std::uniform_int_distribution<int> axis(0, d - 1);
    const int i = axis(rng);
    int j = axis(rng);
    while (j == i) j = axis(rng);
    std::uniform_real_distribution<double> theta(-angle, angle);
    const double t = angle > 0 ? theta(rng) : 0.0;
    const double c = std::cos(t), s = std::sin(t);
    out(i) = c * feature(i) - s * feature(j);
    out(j) = s * feature(i) + c * feature(j);
  }
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (int k = 0; k < d; ++k) out(k) += noise(rng);
  }
  return out;
}

namespace {

struct Track {
  int class_id;
  Motion motion;
  double w, h;
  double cx, cy;
  double y_lo, y_hi;  // lane bounds
  Eigen::VectorXd deviation;
};

BoundingBox box_of(const Track& t) { return {t.cx - t.w / 2, t.cy - t.h / 2, t.cx + t.w / 2, t.cy + t.h / 2}; }

BoundingBox clamp_to_canvas(BoundingBox b, const SyntheticSpec& spec) {
  b.x1 = std::max(0.0, b.x1);
  b.y1 = std::max(0.0, b.y1);
  b.x2 = std::min(spec.canvas_width, b.x2);
  b.y2 = std::min(spec.canvas_height, b.y2);
  return b;
}

BoundingBox jitter(const BoundingBox& b, double amount, Rng& rng) {
  std::uniform_real_distribution<double> u(-amount, amount);
  const double w = b.width(), h = b.height();
  return {b.x1 + u(rng) * w, b.y1 + u(rng) * h, b.x2 + u(rng) * w, b.y2 + u(rng) * h};
}

}  // namespace

VideoSequence generate_video(const SyntheticSpec& spec, const PrototypeSet& prototypes, int video_index) {
  spec.validate();
  if (static_cast<int>(prototypes.size()) != spec.n_classes)
    throw ConfigError("prototype count does not match synthetic.n_classes");
  Rng rng = make_rng(spec.seed, static_cast<std::uint64_t>(video_index) + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> pick_class(0, spec.n_classes - 1);
  std::uniform_int_distribution<int> pick_motion(0, 2);

  const double lane_h = spec.canvas_height / spec.n_objects_per_video;
  const double rho = spec.temporal_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);
  const double track_scale = std::sqrt(1.0 - spec.proposal_noise_share);
  const double proposal_scale = std::sqrt(spec.proposal_noise_share);

  // Each object lives in its own horizontal lane so ground-truth boxes never
  // overlap.
  std::vector<Track> tracks;
  for (int o = 0; o < spec.n_objects_per_video; ++o) {
    Track t;
    t.class_id = pick_class(rng);
    t.motion = static_cast<Motion>(pick_motion(rng));
    t.w = spec.canvas_width * (0.15 + 0.15 * unit(rng));
    t.h = lane_h * (0.6 + 0.3 * unit(rng));
    t.y_lo = o * lane_h;
    t.y_hi = (o + 1) * lane_h;
    t.cx = t.w / 2 + unit(rng) * (spec.canvas_width - t.w);
    t.cy = t.y_lo + t.h / 2 + unit(rng) * (lane_h - t.h);
    const auto& proto = prototypes[static_cast<std::size_t>(t.class_id)];
    t.deviation = degrade(proto, track_scale * spec.sigma(t.motion), spec.pose_angle_max, rng) - proto;
    tracks.push_back(std::move(t));
  }

  const int n_fg = spec.n_foreground();
  const int n_bg = spec.n_background();
  const int n_obj = spec.n_objects_per_video;

  VideoSequence video;
  video.num_classes = spec.n_classes;
  video.feature_dim = spec.feature_dim;
  video.frames.resize(static_cast<std::size_t>(spec.n_frames));

  for (int f = 0; f < spec.n_frames; ++f) {
    auto& frame = video.frames[static_cast<std::size_t>(f)];

    if (f > 0) {
      for (auto& t : tracks) {
        const double step = spec.motion_step[static_cast<int>(t.motion)];
        t.cx = std::clamp(t.cx + step * normal(rng), t.w / 2, spec.canvas_width - t.w / 2);
        t.cy = std::clamp(t.cy + step * normal(rng), t.y_lo + t.h / 2, t.y_hi - t.h / 2);
        const auto& proto = prototypes[static_cast<std::size_t>(t.class_id)];
        const Eigen::VectorXd fresh = degrade(proto, track_scale * spec.sigma(t.motion), spec.pose_angle_max, rng) - proto;
        t.deviation = rho == 0.0 ? fresh : Eigen::VectorXd(rho * t.deviation + innovation * fresh);
      }
    }

    for (int o = 0; o < n_obj; ++o) {
      const auto& t = tracks[static_cast<std::size_t>(o)];
      frame.objects.push_back({f, o, t.class_id, t.motion, box_of(t)});
    }

    // Every object gets one proposal while slots last; leftovers go to
    // random objects.
    std::vector<int> owners(static_cast<std::size_t>(n_obj));
    for (int o = 0; o < n_obj; ++o) owners[static_cast<std::size_t>(o)] = o;
    std::shuffle(owners.begin(), owners.end(), rng);
    std::uniform_int_distribution<int> pick_object(0, n_obj - 1);
    for (int k = 0; k < n_fg; ++k) {
      const int o = k < n_obj ? owners[static_cast<std::size_t>(k)] : pick_object(rng);
      const auto& t = tracks[static_cast<std::size_t>(o)];
      Proposal p;
      p.frame_index = f;
      p.object_id = o;
      p.class_id = t.class_id;
      p.motion = t.motion;
      p.box = clamp_to_canvas(jitter(box_of(t), spec.box_jitter, rng), spec);
      p.feature = prototypes[static_cast<std::size_t>(t.class_id)] + t.deviation;
      const double own = proposal_scale * spec.sigma(t.motion);
      if (own > 0) {
        std::normal_distribution<double> noise(0.0, own);
        for (int j = 0; j < spec.feature_dim; ++j) p.feature(j) += noise(rng);
      }
      frame.proposals.push_back(std::move(p));
    }

    const double bg_scale = 1.0 / std::sqrt(static_cast<double>(spec.feature_dim));
    for (int k = 0; k < n_bg; ++k) {
      Proposal p;
      p.frame_index = f;
      p.object_id = -1;
      p.class_id = spec.n_classes;
      const double w = spec.canvas_width * (0.15 + 0.15 * unit(rng));
      const double h = lane_h * (0.6 + 0.3 * unit(rng));
      const double x = unit(rng) * (spec.canvas_width - w);
      const double y = unit(rng) * (spec.canvas_height - h);
      p.box = {x, y, x + w, y + h};
      p.feature.resize(spec.feature_dim);
      for (int j = 0; j < spec.feature_dim; ++j) p.feature(j) = bg_scale * normal(rng);
      frame.proposals.push_back(std::move(p));
    }
  }
  return video;
}

VideoSequence generate_video(const SyntheticSpec& spec) { return generate_video(spec, make_prototypes(spec), 0); }

std::vector<VideoSequence> generate_dataset(const SyntheticSpec& spec, int first_index, int count) {
  const PrototypeSet protos = make_prototypes(spec);
  std::vector<VideoSequence> videos;
  videos.reserve(static_cast<std::size_t>(std::max(0, count)));
  for (int i = 0; i < count; ++i) videos.push_back(generate_video(spec, protos, first_index + i));
  return videos;
}

}  // namespace selsa
