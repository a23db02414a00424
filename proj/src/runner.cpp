#include "selsa/runner.hpp"

#include "selsa/checkpoint.hpp"
#include "selsa/spectral_report.hpp"
#include "selsa/video_network.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace selsa {

namespace fs = std::filesystem;

namespace {

std::string video_name(const std::string& split, int index) {
  std::ostringstream ss;
  ss << split << '_' << std::setw(3) << std::setfill('0') << index;
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void finish(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  auto os = open_out(path);
  writer(os);
  finish(os, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path data_dir(const ExperimentConfig& c) { return c.output_dir / "data"; }

fs::path checkpoint_path(const ExperimentConfig& c, AggregationMode m) {
  return c.output_dir / ("checkpoint_" + std::string(to_string(m)) + ".csv");
}

void write_resolved_config(const ExperimentConfig& c) {
  write_file(c.output_dir / "config.json", [&](std::ostream& os) { os << config_to_json_text(c); });
}

void check_compatible(const SelsaParams<double>& p, const ExperimentConfig& c, const fs::path& source) {
  if (p.feature_dim() != c.synthetic.feature_dim || p.num_classes() != c.synthetic.n_classes)
    throw ConfigError("incompatible checkpoint " + source.string() + ": feature_dim " + std::to_string(p.feature_dim()) +
                      ", num_classes " + std::to_string(p.num_classes()) + " but config has synthetic.feature_dim " +
                      std::to_string(c.synthetic.feature_dim) + ", synthetic.n_classes " +
                      std::to_string(c.synthetic.n_classes));
}

std::map<AggregationMode, SelsaParams<double>> load_mode_params(const ExperimentConfig& c,
                                                                const std::optional<fs::path>& checkpoint,
                                                                std::ostream& log) {
  std::map<AggregationMode, SelsaParams<double>> params;
  if (checkpoint) {
    auto p = load_checkpoint(*checkpoint);
    check_compatible(p, c, *checkpoint);
    for (auto m : c.train_modes) params.emplace(m, p);
    return params;
  }
  for (auto m : c.train_modes) {
    const auto path = checkpoint_path(c, m);
    if (!fs::exists(path)) {
      log << "warning: " << path.string() << " not found; skipping mode " << to_string(m) << '\n';
      continue;
    }
    auto p = load_checkpoint(path);
    check_compatible(p, c, path);
    params.emplace(m, std::move(p));
  }
  if (params.empty())
    throw IoError("no checkpoints found in " + c.output_dir.string() + "; run `train` first or pass --checkpoint");
  return params;
}

}  // namespace

ExperimentConfig resolve_config(const CliOptions& opts) {
  ExperimentConfig cfg = opts.config ? load_config(*opts.config) : config_from_json_text("{}");
  if (opts.seed) cfg.apply_seed(*opts.seed);
  if (opts.out) cfg.output_dir = *opts.out;
  if (opts.threads) cfg.eval.threads = *opts.threads;
  if (opts.seq_nms) cfg.eval.seq_nms = true;
  cfg.validate();
  return cfg;
}

Dataset load_or_generate_dataset(const ExperimentConfig& c) {
  const auto sidecar_path = data_dir(c) / "dataset.json";
  Dataset ds;
  if (!fs::exists(sidecar_path)) {
    const auto protos = make_prototypes(c.synthetic);
    for (int i = 0; i < c.n_train_videos; ++i) ds.train.push_back(generate_video(c.synthetic, protos, i));
    for (int i = 0; i < c.n_test_videos; ++i)
      ds.test.push_back(generate_video(c.synthetic, protos, c.n_train_videos + i));
    return ds;
  }

  const std::string expected = synthetic_spec_to_json_text(c.synthetic, c.n_train_videos, c.n_test_videos);
  if (read_text(sidecar_path) != expected)
    throw ConfigError(sidecar_path.string() + " does not match the synthetic/dataset config; rerun `generate`");
  auto load = [&](const std::string& split, int index) {
    const auto base = data_dir(c) / video_name(split, index);
    std::ifstream props(base.string() + "_proposals.csv", std::ios::binary);
    std::ifstream gt(base.string() + "_gt.csv", std::ios::binary);
    if (!props || !gt) throw IoError("missing dataset files for " + base.string());
    try {
      return read_video_csv(props, gt, c.synthetic.n_classes);
    } catch (const InputError& e) {
      throw InputError(base.string() + ": " + e.what());
    }
  };
  for (int i = 0; i < c.n_train_videos; ++i) ds.train.push_back(load("train", i));
  for (int i = 0; i < c.n_test_videos; ++i) ds.test.push_back(load("test", i));
  return ds;
}

void cmd_generate(const ExperimentConfig& c, std::ostream& log) {
  write_resolved_config(c);
  const auto protos = make_prototypes(c.synthetic);
  auto emit = [&](const std::string& split, int index, int video_index) {
    const auto video = generate_video(c.synthetic, protos, video_index);
    const auto base = data_dir(c) / video_name(split, index);
    write_file(base.string() + "_proposals.csv", [&](std::ostream& os) { write_proposals_csv(os, video); });
    write_file(base.string() + "_gt.csv", [&](std::ostream& os) { write_ground_truth_csv(os, video); });
  };
  for (int i = 0; i < c.n_train_videos; ++i) emit("train", i, i);
  for (int i = 0; i < c.n_test_videos; ++i) emit("test", i, c.n_train_videos + i);
  // The sidecar goes last so a partial dataset is never mistaken for a complete one.
  write_file(data_dir(c) / "dataset.json", [&](std::ostream& os) {
    os << synthetic_spec_to_json_text(c.synthetic, c.n_train_videos, c.n_test_videos);
  });
  log << "generated " << c.n_train_videos << " train and " << c.n_test_videos << " test videos in "
      << data_dir(c).string() << '\n';
}

void cmd_train(const ExperimentConfig& c, std::ostream& log) {
  write_resolved_config(c);
  const auto data = load_or_generate_dataset(c);
  for (auto mode : c.train_modes) {
    TrainConfig tc = c.train;
    tc.aggregation_mode = mode;
    const auto start = std::chrono::steady_clock::now();
    const auto result = train(data.train, tc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_checkpoint(checkpoint_path(c, mode), result.params);
    write_file(c.output_dir / ("loss_" + std::string(to_string(mode)) + ".csv"),
               [&](std::ostream& os) { write_loss_csv(os, result.history); });
    log << "trained " << to_string(mode) << ": " << tc.n_iterations << " iterations in " << std::fixed
        << std::setprecision(1) << secs << " s";
    if (!result.history.empty()) log << ", final loss " << std::setprecision(4) << result.history.back().loss;
    log << '\n' << std::defaultfloat;
  }
}

void cmd_eval(const ExperimentConfig& c, bool plot_data, const std::optional<fs::path>& checkpoint, std::ostream& log) {
  write_resolved_config(c);
  const auto params = load_mode_params(c, checkpoint, log);
  const auto data = load_or_generate_dataset(c);
  const auto results = ablation_suite(params, data.test, c.eval);
  write_file(c.output_dir / "results.csv", [&](std::ostream& os) { write_results_csv(os, results); });

  // Raw per-video detections of each mode at its default test plan.
  for (const auto& [mode, p] : params) {
    DetectOptions o;
    o.score_threshold = c.eval.score_threshold;
    o.aggregate = mode != AggregationMode::None;
    o.plan = mode == AggregationMode::FullSequence ? c.eval.full_sequence_plan
                                                    : SamplingPlan{SamplingMode::Consecutive, 1, 1};
    for (std::size_t v = 0; v < data.test.size(); ++v) {
      Rng rng = make_rng(c.eval.seed, 0xde7ec7 + v);
      auto dets = nms_per_frame(detect(data.test[v], p, o, rng), c.eval.nms_iou);
      write_file(c.output_dir / "detections" / std::string(to_string(mode)) / (video_name("test", static_cast<int>(v)) + ".csv"),
                 [&](std::ostream& os) { write_detections_csv(os, dets); });
    }
  }

  if (plot_data) {
    for (const auto& curve : results.curves)
      write_file(c.output_dir / "curves" / (curve.name + ".csv"), [&](std::ostream& os) { write_curve_csv(os, curve); });
  }
  for (auto mode : {AggregationMode::None, AggregationMode::WithinFrame, AggregationMode::FullSequence}) {
    if (auto v = results.find("mode_" + std::string(to_string(mode)), "mAP", "all"))
      log << "mAP " << to_string(mode) << ": " << *v << '\n';
  }
  if (auto v = results.find("seq_nms_delta", "mAP", "all")) log << "Seq-NMS delta: " << *v << '\n';
}

void cmd_spectral(const ExperimentConfig& c, const std::optional<fs::path>& checkpoint, std::ostream& log) {
  write_resolved_config(c);
  const auto params = load_mode_params(c, checkpoint, log);
  auto it = params.find(AggregationMode::FullSequence);
  if (it == params.end()) it = params.begin();
  const auto& after = it->second;
  const auto before = initial_params(c.train, c.synthetic.feature_dim, c.synthetic.n_classes);

  const auto data = load_or_generate_dataset(c);
  const auto& video = data.test.front();
  std::vector<int> frames;
  for (int f = 0; f < std::min(c.spectral_frames, video.length()); ++f) frames.push_back(f);
  const Matrix<double> x = video.stacked_features(frames);
  Eigen::VectorXi labels(x.rows());
  Eigen::Index r = 0;
  for (int f : frames)
    for (const auto& p : video.frames[static_cast<std::size_t>(f)].proposals) labels(r++) = p.class_id;

  const auto report = cluster_risk_report(x, labels, c.synthetic.n_classes + 1, before, after);
  for (const auto& w : report.warnings) log << "warning: " << w << '\n';
  write_file(c.output_dir / "spectral_risk.csv", [&](std::ostream& os) { write_cluster_risk_csv(os, report); });
  log << "spectral report: " << report.rows.size() << " classes, checkpoint " << to_string(it->first) << '\n';
}

int run_cli(int argc, char** argv) {
  CLI::App app{"SELSA desk-scale experiment runner"};
  app.require_subcommand(1);
  CliOptions opts;
  std::string config_path, out_path, checkpoint_path_str;
  std::uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config (defaults when omitted)");
    sub->add_option("--seed", seed, "Global seed, overrides the config");
    sub->add_option("--out", out_path, "Output directory, overrides the config");
    sub->add_option("--threads", threads, "Worker threads for evaluation")->check(CLI::PositiveNumber);
    sub->add_flag("--seq-nms", opts.seq_nms, "Add Seq-NMS post-processing rows to the eval table");
    sub->add_flag("--plot-data", opts.plot_data, "Write x,y curve files for the sampling ablations");
    sub->add_option("--checkpoint", checkpoint_path_str, "Evaluate this checkpoint for every mode");
  };
  auto* gen = app.add_subcommand("generate", "Write the synthetic train/test videos");
  auto* trn = app.add_subcommand("train", "Train one model per aggregation mode");
  auto* evl = app.add_subcommand("eval", "Run the ablation suite on the test videos");
  auto* spc = app.add_subcommand("spectral", "Write the per-class aggregation risk report");
  auto* all = app.add_subcommand("all", "generate, train, eval and spectral in sequence");
  for (auto* s : {gen, trn, evl, spc, all}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--config")) opts.config = config_path;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out = out_path;
  if (sub->count("--threads")) opts.threads = threads;
  if (sub->count("--checkpoint")) opts.checkpoint = checkpoint_path_str;

  try {
    const auto cfg = resolve_config(opts);
    if (sub == gen || sub == all) cmd_generate(cfg, std::cerr);
    if (sub == trn || sub == all) cmd_train(cfg, std::cerr);
    if (sub == evl || sub == all) cmd_eval(cfg, opts.plot_data, opts.checkpoint, std::cerr);
    if (sub == spc || sub == all) cmd_spectral(cfg, opts.checkpoint, std::cerr);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace selsa
