#include "selsa/config.hpp"

#include "selsa/errors.hpp"
#include "selsa/random.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace selsa {

using nlohmann::json;

void ExperimentConfig::apply_seed(std::uint64_t root) {
  seed = root;
  synthetic.seed = mix_seed(root, 1);
  train.seed = mix_seed(root, 2);
  eval.seed = mix_seed(root, 3);
}

void ExperimentConfig::validate() const {
  synthetic.validate();
  train.validate();
  eval.validate();
  if (n_train_videos < 1) throw ConfigError("dataset.n_train_videos: must be >= 1");
  if (n_test_videos < 1) throw ConfigError("dataset.n_test_videos: must be >= 1");
  if (spectral_frames < 1) throw ConfigError("spectral.frames: must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

namespace {

// Walks a JSON object, reading known keys and rejecting the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }
  // Rejects keys that no get/object/enumeration call asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

  template <typename T>
  void get(const std::string& key, T& dst) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      dst = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  template <typename F>
  void object(const std::string& key, F&& f) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Reader sub(*it, where(key));
    f(sub);
    sub.finish();
  }

  template <typename E, typename Parse>
  void enumeration(const std::string& key, E& dst, Parse parse) {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (!present) return;
    auto v = parse(s);
    if (!v) throw ConfigError(where(key) + ": unknown value '" + s + "'");
    dst = *v;
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_motion_triplet(Reader& r, const std::string& key, std::array<double, 3>& dst) {
  r.object(key, [&](Reader& m) {
    m.get("slow", dst[0]);
    m.get("medium", dst[1]);
    m.get("fast", dst[2]);
  });
}

void read_synthetic(Reader& s, SyntheticSpec& spec) {
  s.get("n_classes", spec.n_classes);
  s.get("feature_dim", spec.feature_dim);
  s.get("n_frames", spec.n_frames);
  s.get("proposals_per_frame", spec.proposals_per_frame);
  s.get("n_objects_per_video", spec.n_objects_per_video);
  read_motion_triplet(s, "degradation_sigma", spec.degradation_sigma);
  read_motion_triplet(s, "motion_step", spec.motion_step);
  s.get("temporal_correlation", spec.temporal_correlation);
  s.get("proposal_noise_share", spec.proposal_noise_share);
  s.get("pose_angle_max", spec.pose_angle_max);
  s.get("background_fraction", spec.background_fraction);
  s.object("canvas", [&](Reader& c) {
    c.get("width", spec.canvas_width);
    c.get("height", spec.canvas_height);
  });
  s.get("box_jitter", spec.box_jitter);
}

json motion_triplet(const std::array<double, 3>& v) { return {{"slow", v[0]}, {"medium", v[1]}, {"fast", v[2]}}; }

json synthetic_json(const SyntheticSpec& s) {
  return {{"n_classes", s.n_classes},
          {"feature_dim", s.feature_dim},
          {"n_frames", s.n_frames},
          {"proposals_per_frame", s.proposals_per_frame},
          {"n_objects_per_video", s.n_objects_per_video},
          {"degradation_sigma", motion_triplet(s.degradation_sigma)},
          {"motion_step", motion_triplet(s.motion_step)},
          {"temporal_correlation", s.temporal_correlation},
          {"proposal_noise_share", s.proposal_noise_share},
          {"pose_angle_max", s.pose_angle_max},
          {"background_fraction", s.background_fraction},
          {"canvas", {{"width", s.canvas_width}, {"height", s.canvas_height}}},
          {"box_jitter", s.box_jitter}};
}

json plan_json(const SamplingPlan& p) {
  return {{"mode", std::string(to_string(p.mode))}, {"k_frames", p.k_frames}, {"stride", p.stride}};
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  std::uint64_t seed = 0;
  {
    Reader r(j, "");
    r.get("seed", seed);
    r.object("synthetic", [&](Reader& s) { read_synthetic(s, cfg.synthetic); });
    r.object("dataset", [&](Reader& d) {
      d.get("n_train_videos", cfg.n_train_videos);
      d.get("n_test_videos", cfg.n_test_videos);
    });
    r.object("train", [&](Reader& t) {
      t.get("learning_rate", cfg.train.learning_rate);
      t.get("lr_decay_steps", cfg.train.lr_decay_steps);
      t.get("decay_factor", cfg.train.decay_factor);
      t.get("n_iterations", cfg.train.n_iterations);
      t.get("frames_per_sample", cfg.train.frames_per_sample);
      t.get("sim_dim", cfg.train.sim_dim);
      t.get("residual", cfg.train.residual);
      std::vector<std::string> modes;
      const bool has_modes = j.contains("train") && j["train"].contains("modes");
      t.get("modes", modes);
      if (has_modes) {
        cfg.train_modes.clear();
        for (const auto& m : modes) {
          auto v = parse_aggregation_mode(m);
          if (!v) throw ConfigError("train.modes: unknown mode '" + m + "'");
          cfg.train_modes.push_back(*v);
        }
      }
    });
    r.object("eval", [&](Reader& e) {
      e.get("score_threshold", cfg.eval.score_threshold);
      e.get("iou_threshold", cfg.eval.iou_threshold);
      e.get("nms_iou", cfg.eval.nms_iou);
      e.get("ignore_other_splits", cfg.eval.ignore_other_splits);
      e.object("full_sequence_plan", [&](Reader& p) {
        p.enumeration("mode", cfg.eval.full_sequence_plan.mode, parse_sampling_mode);
        p.get("k_frames", cfg.eval.full_sequence_plan.k_frames);
        p.get("stride", cfg.eval.full_sequence_plan.stride);
      });
      e.get("consecutive_counts", cfg.eval.consecutive_counts);
      e.get("stride_frames", cfg.eval.stride_frames);
      e.get("strides", cfg.eval.strides);
      e.get("shuffled_counts", cfg.eval.shuffled_counts);
    });
    r.object("seq_nms", [&](Reader& s) {
      s.get("enabled", cfg.eval.seq_nms);
      s.get("link_iou", cfg.eval.seq_nms_options.link_iou);
      s.enumeration("rescore", cfg.eval.seq_nms_options.rescore, parse_rescore);
      s.get("nms_iou", cfg.eval.seq_nms_options.nms_iou);
    });
    r.object("spectral", [&](Reader& s) { s.get("frames", cfg.spectral_frames); });
    std::string out = cfg.output_dir.string();
    r.get("output_dir", out);
    cfg.output_dir = out;
    r.get("threads", cfg.eval.threads);
    r.finish();
  }
  cfg.apply_seed(seed);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return config_from_json_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json_text(const ExperimentConfig& c) {
  std::vector<std::string> modes;
  for (auto m : c.train_modes) modes.emplace_back(to_string(m));
  json j = {{"seed", c.seed},
            {"synthetic", synthetic_json(c.synthetic)},
            {"dataset", {{"n_train_videos", c.n_train_videos}, {"n_test_videos", c.n_test_videos}}},
            {"train",
             {{"learning_rate", c.train.learning_rate},
              {"lr_decay_steps", c.train.lr_decay_steps},
              {"decay_factor", c.train.decay_factor},
              {"n_iterations", c.train.n_iterations},
              {"frames_per_sample", c.train.frames_per_sample},
              {"sim_dim", c.train.sim_dim},
              {"residual", c.train.residual},
              {"modes", modes}}},
            {"eval",
             {{"score_threshold", c.eval.score_threshold},
              {"iou_threshold", c.eval.iou_threshold},
              {"nms_iou", c.eval.nms_iou},
              {"ignore_other_splits", c.eval.ignore_other_splits},
              {"full_sequence_plan", plan_json(c.eval.full_sequence_plan)},
              {"consecutive_counts", c.eval.consecutive_counts},
              {"stride_frames", c.eval.stride_frames},
              {"strides", c.eval.strides},
              {"shuffled_counts", c.eval.shuffled_counts}}},
            {"seq_nms",
             {{"enabled", c.eval.seq_nms},
              {"link_iou", c.eval.seq_nms_options.link_iou},
              {"rescore", std::string(to_string(c.eval.seq_nms_options.rescore))},
              {"nms_iou", c.eval.seq_nms_options.nms_iou}}},
            {"spectral", {{"frames", c.spectral_frames}}},
            {"output_dir", c.output_dir.string()},
            {"threads", c.eval.threads}};
  return j.dump(2) + "\n";
}

std::string synthetic_spec_to_json_text(const SyntheticSpec& spec, int n_train_videos, int n_test_videos) {
  json j = synthetic_json(spec);
  j["seed"] = spec.seed;
  j["n_train_videos"] = n_train_videos;
  j["n_test_videos"] = n_test_videos;
  return j.dump(2) + "\n";
}

DatasetSidecar synthetic_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("dataset spec is not valid JSON: ") + e.what());
  }
  DatasetSidecar out;
  {
    Reader r(j, "");
    read_synthetic(r, out.spec);
    r.get("seed", out.spec.seed);
    r.get("n_train_videos", out.n_train_videos);
    r.get("n_test_videos", out.n_test_videos);
    r.finish();
  }
  out.spec.validate();
  return out;
}

}  // namespace selsa
