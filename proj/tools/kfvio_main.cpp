#include <CLI11.hpp>
#include <glog/logging.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "kfvio/core/error.hpp"
#include "kfvio/pipeline/run.hpp"

using namespace kfvio;

namespace {

struct CommonOptions {
  std::string dataset;
  std::string config;
  std::string preset;
  std::string mode;
  std::string kf_policy;
  std::string frontend;
  bool no_compression = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_frames;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool dataset_required) {
  auto* ds = cmd->add_option("--dataset", o.dataset, "EuRoC directory or synthetic:NAME");
  if (dataset_required) ds->required();
  cmd->add_option("--preset", o.preset, "adaptation preset (max, easy, MH_01 ... V2_03)");
  cmd->add_option("--mode", o.mode, "mono or stereo")->check(CLI::IsMember({"mono", "stereo"}));
  cmd->add_option("--kf-policy", o.kf_policy, "rate:k or dist:m");
  cmd->add_option("--frontend", o.frontend, "image or oracle (synthetic only)")->check(CLI::IsMember({"image", "oracle"}));
  cmd->add_flag("--no-compression", o.no_compression, "track and match on raw frames");
  cmd->add_option("--seed", o.seed, "RANSAC seed");
}

PipelineConfig resolve(const CommonOptions& o) {
  PipelineConfig c = o.config.empty() ? (o.preset.empty() ? PipelineConfig{} : adaptation_preset(o.preset))
                                      : load_pipeline_config(o.config);
  if (!o.config.empty() && !o.preset.empty()) {
    const PipelineConfig p = adaptation_preset(o.preset);
    c.vfe.max_features = p.vfe.max_features;
    c.backend.horizon = p.backend.horizon;
  }
  if (!o.mode.empty()) c.stereo = o.mode == "stereo";
  if (!o.kf_policy.empty()) c.keyframes = KeyframePolicy::parse(o.kf_policy);
  if (!o.frontend.empty()) c.frontend = o.frontend == "image" ? FrontendKind::kImage : FrontendKind::kOracle;
  if (o.no_compression) c.vfe.compression = false;
  if (o.seed) c.seed = *o.seed;
  c.sync();
  c.validate();
  return c;
}

void print_summary(const RunReport& r) {
  std::size_t kfs = 0;
  for (const auto& f : r.frames) kfs += f.keyframe;
  std::printf("frames %zu, keyframes %zu, map points %zu\n", r.frames.size(), kfs, r.map.size());
  if (r.error)
    std::printf("ATE %.4f m over %.2f m path: %.3f%% (yaw-aligned %.3f%%; reference 0.28%%)\n", r.error->ate_rmse,
                r.error->path_length, r.error->normalized, r.error->normalized_yaw);
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  CLI::App app{"Keyframe-based visual-inertial odometry"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run VIO on a sequence and write trajectory, map and report");
  add_common(run, run_opts, true);
  run->add_option("--config", run_opts.config, "pipeline YAML")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--max-frames", run_opts.max_frames, "stop after this many frames");

  CommonOptions sweep_opts;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep-compression", "trajectory error against bits per pixel and block size");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--config", sweep_opts.config, "pipeline YAML")->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "CSV file (stdout when omitted)");
  sweep->add_option("--max-frames", sweep_opts.max_frames, "stop after this many frames");

  CommonOptions model_opts;
  std::string model_json_out;
  auto* model = app.add_subcommand("model", "memory and operation-count model without running VIO");
  model->add_option("--config", model_opts.config, "pipeline YAML")->check(CLI::ExistingFile);
  model->add_option("--preset", model_opts.preset, "adaptation preset");
  model->add_option("--mode", model_opts.mode, "mono or stereo")->check(CLI::IsMember({"mono", "stereo"}));
  model->add_flag("--no-compression", model_opts.no_compression, "frame buffers uncompressed");
  model->add_option("--json", model_json_out, "also write the model as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const PipelineConfig cfg = resolve(run_opts);
      DatasetHandle data = open_dataset(run_opts.dataset);
      RunReport report = run_sequence(cfg, *data.sequence, data.synthetic, {run_opts.max_frames});
      report.dataset = data.name;
      write_run_outputs(report, out_dir);
      print_summary(report);
      std::printf("wrote %s/{trajectory.csv,map.ply,report.json}\n", out_dir.c_str());
    } else if (*sweep) {
      const PipelineConfig cfg = resolve(sweep_opts);
      DatasetHandle data = open_dataset(sweep_opts.dataset);
      const auto points = sweep_compression(cfg, *data.sequence, default_sweep(), {sweep_opts.max_frames});
      const std::string csv = sweep_csv(points);
      if (sweep_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(sweep_out) << csv;
        std::printf("wrote %s\n", sweep_out.c_str());
      }
    } else if (*model) {
      const PipelineConfig cfg = resolve(model_opts);
      const ModelReport m = model_report(cfg);
      std::cout << format_model_report(m);
      if (!model_json_out.empty()) {
        RunReport r;
        r.config = cfg;
        r.model = m;
        std::ofstream(model_json_out) << report_json(r) << '\n';
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
