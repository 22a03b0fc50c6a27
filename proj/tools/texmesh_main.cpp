#include "texmesh/pipeline.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CliOptions {
  std::string config;
  texmesh::PipelineOptions pipeline;
  std::string selection_mode = "worse";
  std::string seg_dir;
  std::vector<double> levels;
};

void add_common(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("-c,--config", opts.config, "dataset config file")->required();
  cmd->add_option("-o,--out", opts.pipeline.out_dir, "output directory")->required();
  cmd->add_option("--threads", opts.pipeline.threads, "worker thread cap");
  cmd->add_option("--seed", opts.pipeline.seed, "seed for all randomness");
}

int run(CLI::App& app, const std::vector<std::string>& stages, CliOptions& opts) {
  if (!opts.seg_dir.empty()) opts.pipeline.seg_dir = opts.seg_dir;
  if (!opts.levels.empty()) opts.pipeline.robustness_levels = opts.levels;
  if (opts.selection_mode == "best") {
    opts.pipeline.selection_mode = texmesh::SelectionMode::kBest;
  } else if (opts.selection_mode == "worse") {
    opts.pipeline.selection_mode = texmesh::SelectionMode::kWorse;
  } else {
    std::cerr << "error: --mode must be worse or best\n";
    return 1;
  }
  (void)app;
  const texmesh::DatasetManifest manifest = texmesh::load_dataset(opts.config);
  texmesh::run_pipeline(manifest, stages, opts.pipeline);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic textured mesh toolkit"};
  app.require_subcommand(1);

  CliOptions opts;

  CLI::App* estimate = app.add_subcommand("estimate-normals",
                                          "simplify scans and export an oriented point cloud");
  add_common(estimate, opts);
  estimate->add_option("--rdp-epsilon", opts.pipeline.rdp_epsilon, "line simplification tolerance [m]");

  CLI::App* fuse = app.add_subcommand("fuse", "fuse segmentations and color into the textures");
  add_common(fuse, opts);
  fuse->add_option("--texture-size", opts.pipeline.texture_size, "texture resolution per side");
  fuse->add_option("--dmin", opts.pipeline.d_min, "distance weight lower threshold [m]");
  fuse->add_option("--dmax", opts.pipeline.d_max, "distance weight upper threshold [m]");
  fuse->add_option("--depth-bias", opts.pipeline.depth_bias, "visibility depth bias [m]");
  fuse->add_option("--decommit-threshold", opts.pipeline.decommit_threshold,
                   "page decommit probability threshold");
  fuse->add_option("--sweep-every", opts.pipeline.sweep_every, "decommit sweep cadence in frames (0 = off)");
  fuse->add_option("--seg-dir", opts.seg_dir, "directory of retrained probmaps (frame_XXXXXX.sprb)");

  CLI::App* propagate = app.add_subcommand("propagate", "score frames and emit pseudo-GT for retraining");
  add_common(propagate, opts);
  propagate->add_option("--texture-size", opts.pipeline.texture_size, "texture resolution per side");
  propagate->add_option("--p-min", opts.pipeline.p_min, "pseudo-GT confidence threshold");
  propagate->add_option("--fraction", opts.pipeline.fraction, "fraction of frames to select");
  propagate->add_option("--min-spacing", opts.pipeline.min_spacing, "minimum id distance between picks");
  propagate->add_option("--mode", opts.selection_mode, "selection mode: worse|best");
  propagate->add_option("--iteration", opts.pipeline.iteration, "propagation round number");
  propagate->add_option("--seg-dir", opts.seg_dir, "directory of retrained probmaps");

  CLI::App* evaluate = app.add_subcommand("evaluate", "back-projected IoU against ground-truth frames");
  add_common(evaluate, opts);
  evaluate->add_option("--texture-size", opts.pipeline.texture_size, "texture resolution per side");

  CLI::App* robustness = app.add_subcommand("robustness", "IoU under increasing pose noise");
  add_common(robustness, opts);
  robustness->add_option("--texture-size", opts.pipeline.texture_size, "texture resolution per side");
  robustness->add_option("--levels", opts.levels, "noise levels in [0,1]");
  robustness->add_option("--noise-translation", opts.pipeline.noise_translation,
                         "translation bound at level 1 [m]");
  robustness->add_option("--noise-rotation", opts.pipeline.noise_rotation_deg,
                         "rotation bound at level 1 [deg]");
  robustness->add_option("--dmin", opts.pipeline.d_min, "distance weight lower threshold [m]");
  robustness->add_option("--dmax", opts.pipeline.d_max, "distance weight upper threshold [m]");

  CLI::App* exp = app.add_subcommand("export", "write the fused mesh as OBJ+MTL+PNG");
  add_common(exp, opts);
  exp->add_option("--texture-size", opts.pipeline.texture_size, "texture resolution per side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    for (CLI::App* sub : {estimate, fuse, propagate, evaluate, robustness, exp}) {
      if (sub->parsed()) return run(app, {sub->get_name()}, opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
