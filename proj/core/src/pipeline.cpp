#include "texmesh/pipeline.hpp"

#include "texmesh/color_fusion.hpp"
#include "texmesh/local_mesh.hpp"
#include "texmesh/ply_io.hpp"
#include "texmesh/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

namespace texmesh {

namespace {

std::map<int, Pose> pose_by_frame(const DatasetManifest& manifest) {
  const Trajectory traj = load_trajectory(manifest.trajectory_path);
  std::map<int, Pose> poses;
  for (std::size_t i = 0; i < traj.size(); ++i) poses[traj.ids[i]] = traj.world_from_camera[i];
  return poses;
}

Pose frame_pose(const std::map<int, Pose>& poses, int id) {
  const auto it = poses.find(id);
  if (it == poses.end()) {
    throw std::runtime_error("pipeline: frame " + std::to_string(id) + " has no trajectory pose");
  }
  return it->second.inverse();  // world<-camera on disk, frame<-world at use
}

std::filesystem::path frame_probmap(const FrameRecord& frame, const PipelineOptions& options) {
  if (!options.seg_dir) return frame.probmap;
  // Retrained predictions replace the manifest's probmaps by frame id.
  char name[64];
  std::snprintf(name, sizeof(name), "frame_%06d.sprb", frame.id);
  const auto path = *options.seg_dir / name;
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("pipeline: segmentation override missing: " + path.string());
  }
  return path;
}

void require_artifact(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("pipeline: missing artifact " + path.string() + "; run `" + producer +
                             "` first");
  }
}

}  // namespace

std::filesystem::path semantic_checkpoint_path(const PipelineOptions& options) {
  return options.out_dir / "semantic.stx";
}

std::filesystem::path color_checkpoint_path(const PipelineOptions& options) {
  return options.out_dir / "color.ctx";
}

TexturedMesh load_dataset_mesh(const DatasetManifest& manifest, const PipelineOptions& options) {
  if (!manifest.mesh_path) throw std::runtime_error("pipeline: dataset config has no mesh entry");
  MeshLoadOptions load_options;
  load_options.require_uvs = false;
  TexturedMesh mesh = load_mesh(*manifest.mesh_path, load_options);
  if (!mesh.has_uvs()) {
    std::cout << "[pipeline] mesh has no UVs; generating fallback atlas at " << options.texture_size
              << "\n";
    mesh = generate_uv_atlas(mesh, options.texture_size);
  }
  return mesh;
}

FusionParams fusion_params(const DatasetManifest& manifest, const PipelineOptions& options) {
  FusionParams params;
  params.d_min = options.d_min.value_or(manifest.d_min);
  params.d_max = options.d_max.value_or(manifest.d_max);
  params.depth_bias = options.depth_bias;
  if (params.d_min < 0.0 || params.d_max <= params.d_min) {
    throw std::runtime_error("pipeline: need 0 <= dmin < dmax");
  }
  return params;
}

void stage_estimate_normals(const DatasetManifest& manifest, const PipelineOptions& options) {
  if (!manifest.scans_dir) throw std::runtime_error("pipeline: dataset config has no scans directory");
  const auto files = list_scan_files(*manifest.scans_dir);
  if (files.empty()) throw std::runtime_error("pipeline: no .sscn scans in " + manifest.scans_dir->string());

  std::filesystem::create_directories(options.out_dir);
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  for (const auto& file : files) {
    const OrganizedScan scan = read_scan(file);
    for (const OrientedPoint& p : estimate_oriented_cloud(scan, options.rdp_epsilon)) {
      positions.push_back(p.position);
      normals.push_back(p.normal);
    }
  }
  const auto out = options.out_dir / "cloud.ply";
  write_ply_oriented_points(out, positions, normals);
  std::cout << "[pipeline] estimate-normals: " << positions.size() << " oriented points -> " << out
            << "\n";
}

void stage_fuse(const DatasetManifest& manifest, const PipelineOptions& options) {
  std::filesystem::create_directories(options.out_dir);
  const TexturedMesh mesh = load_dataset_mesh(manifest, options);
  const TexelTable table = build_texel_table(mesh, options.texture_size);
  const FusionParams params = fusion_params(manifest, options);
  const auto poses = pose_by_frame(manifest);

  SparseSemanticTexture store(options.texture_size, manifest.class_count, options.decommit_threshold);
  ColorTexture color(options.texture_size);

  nlohmann::json frame_log = nlohmann::json::array();
  int since_sweep = 0;
  for (const FrameRecord& frame : manifest.frames) {
    const Pose frame_from_world = frame_pose(poses, frame.id);
    const SegmentationResult seg = read_probmap(frame_probmap(frame, options));
    const ImageRgb8 rgb = read_png_rgb8(frame.rgb);

    const DepthMap depth = render_depth(mesh, manifest.intrinsics, frame_from_world, options.threads);
    const FrameFusionStats sem_stats = fuse_semantic_frame(store, table, manifest.intrinsics,
                                                           frame_from_world, depth, seg, params,
                                                           options.threads);
    fuse_color_frame(color, table, manifest.intrinsics, frame_from_world, rgb, depth, params,
                     options.threads);

    int freed = 0;
    if (options.sweep_every > 0 && ++since_sweep >= options.sweep_every) {
      freed = store.decommit_sweep();
      since_sweep = 0;
    }
    frame_log.push_back({{"id", frame.id},
                         {"fused", sem_stats.fused},
                         {"occluded", sem_stats.occluded},
                         {"out_of_view", sem_stats.out_of_view},
                         {"pages_freed", freed}});
  }

  store.save_checkpoint(semantic_checkpoint_path(options));
  save_color_checkpoint(color_checkpoint_path(options), color);

  const MemoryStats mem = store.memory_stats();
  nlohmann::json report;
  report["frames"] = frame_log;
  report["committed_pages"] = mem.committed_pages;
  report["committed_bytes"] = mem.committed_bytes;
  report["dense_bytes"] = mem.dense_bytes;
  report["committed_fraction"] = mem.committed_fraction;
  std::ofstream(options.out_dir / "fuse_report.json") << report.dump(2) << "\n";
  std::cout << "[pipeline] fuse: " << manifest.frames.size() << " frames, "
            << mem.committed_pages << " pages committed (" << mem.committed_fraction * 100.0 << "%)\n";
}

RoundReport stage_propagate(const DatasetManifest& manifest, const PipelineOptions& options) {
  require_artifact(semantic_checkpoint_path(options), "fuse");
  const SparseSemanticTexture store = SparseSemanticTexture::load_checkpoint(semantic_checkpoint_path(options));
  const TexturedMesh mesh = load_dataset_mesh(manifest, options);
  const auto poses = pose_by_frame(manifest);

  RoundReport report;
  std::map<int, PseudoGroundTruth> pgt_by_frame;
  std::map<int, std::string> rgb_by_frame;
  for (const FrameRecord& frame : manifest.frames) {
    const Pose frame_from_world = frame_pose(poses, frame.id);
    const SegmentationResult seg = read_probmap(frame_probmap(frame, options));
    PseudoGroundTruth pgt = render_pseudo_gt(mesh, store, manifest.intrinsics, frame_from_world,
                                             options.p_min, frame.id, options.threads);
    report.reports.push_back(inconsistency(seg, pgt));
    pgt_by_frame.emplace(frame.id, std::move(pgt));
    rgb_by_frame.emplace(frame.id, frame.rgb.string());
  }
  for (const auto& r : report.reports) report.mean_gamma += r.gamma;
  report.mean_gamma /= static_cast<double>(report.reports.size());

  SelectionParams selection;
  selection.fraction = options.fraction;
  selection.min_spacing = options.min_spacing;
  selection.mode = options.selection_mode;
  report.selected = select_frames(report.reports, selection);

  ManifestMeta meta;
  meta.iteration = options.iteration;
  meta.p_min = options.p_min;
  meta.selection_mode = options.selection_mode == SelectionMode::kWorse ? "worse" : "best";
  meta.fraction = options.fraction;
  const auto round_dir = options.out_dir / ("propagation_" + std::to_string(options.iteration));
  report.manifest_path = emit_training_manifest(report.selected, pgt_by_frame, rgb_by_frame,
                                                manifest.palette.colors, round_dir, meta);
  report.checkpoint_path = semantic_checkpoint_path(options);

  nlohmann::json j;
  j["iteration"] = options.iteration;
  j["mean_gamma"] = report.mean_gamma;
  j["selected"] = report.selected;
  nlohmann::json gammas = nlohmann::json::array();
  for (const auto& r : report.reports) {
    gammas.push_back({{"frame", r.frame_id},
                      {"gamma", r.gamma},
                      {"evaluated", r.evaluated_pixels},
                      {"consistent_fraction",
                       r.consistent_fraction ? nlohmann::json(*r.consistent_fraction) : nlohmann::json()}});
  }
  j["frames"] = gammas;
  std::ofstream(round_dir / "propagate_report.json") << j.dump(2) << "\n";
  std::cout << "[pipeline] propagate: mean gamma " << report.mean_gamma << ", selected "
            << report.selected.size() << " frames -> " << report.manifest_path << "\n";
  return report;
}

namespace {

std::vector<EvalFrame> gt_frames(const DatasetManifest& manifest, const std::map<int, Pose>& poses) {
  std::vector<EvalFrame> frames;
  for (const FrameRecord& frame : manifest.frames) {
    if (!frame.gt) continue;
    EvalFrame f;
    f.id = frame.id;
    f.model = manifest.intrinsics;
    f.frame_from_world = frame_pose(poses, frame.id);
    f.gt_labels = read_png_indexed(*frame.gt);
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw std::runtime_error("pipeline: no frames carry ground-truth labels");
  return frames;
}

}  // namespace

IoUReport stage_evaluate(const DatasetManifest& manifest, const PipelineOptions& options) {
  require_artifact(semantic_checkpoint_path(options), "fuse");
  const SparseSemanticTexture store = SparseSemanticTexture::load_checkpoint(semantic_checkpoint_path(options));
  const TexturedMesh mesh = load_dataset_mesh(manifest, options);
  const auto poses = pose_by_frame(manifest);

  const IoUReport report = evaluate_backprojection(mesh, store, gt_frames(manifest, poses), kUnlabeled,
                                                   options.threads);
  std::filesystem::create_directories(options.out_dir);
  std::ofstream(options.out_dir / "evaluation.json") << iou_report_json(report, manifest.palette.names)
                                                     << "\n";
  std::ofstream(options.out_dir / "evaluation.txt") << format_iou_table(report, manifest.palette.names);
  std::cout << "[pipeline] evaluate: mean IoU " << report.mean << " over " << report.evaluated_pixels
            << " pixels\n";
  return report;
}

std::vector<RobustnessLevel> stage_robustness(const DatasetManifest& manifest,
                                              const PipelineOptions& options) {
  const TexturedMesh mesh = load_dataset_mesh(manifest, options);
  const TexelTable table = build_texel_table(mesh, options.texture_size);
  const auto poses = pose_by_frame(manifest);

  RobustnessInputs inputs;
  inputs.mesh = &mesh;
  inputs.table = &table;
  inputs.class_count = manifest.class_count;
  inputs.fusion = fusion_params(manifest, options);
  inputs.decommit_threshold = options.decommit_threshold;
  inputs.sweep_every = options.sweep_every;
  inputs.max_translation = options.noise_translation;
  inputs.max_rotation_deg = options.noise_rotation_deg;
  inputs.threads = options.threads;
  for (const FrameRecord& frame : manifest.frames) {
    if (!frame.gt) continue;
    inputs.trajectory.ids.push_back(frame.id);
    inputs.trajectory.world_from_camera.push_back(frame_pose(poses, frame.id).inverse());
    inputs.models.push_back(manifest.intrinsics);
    inputs.segs.push_back(read_probmap(frame.probmap));
    inputs.gt_labels.push_back(read_png_indexed(*frame.gt));
  }
  if (inputs.trajectory.size() == 0) {
    throw std::runtime_error("pipeline: robustness requires frames with ground truth");
  }

  const auto series = robustness_sweep(inputs, options.robustness_levels, options.seed);

  std::filesystem::create_directories(options.out_dir);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& entry : series) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [c, score] : entry.report.per_class) {
      const std::string name = c < static_cast<int>(manifest.palette.names.size())
                                   ? manifest.palette.names[c]
                                   : "class" + std::to_string(c);
      per_class[name] = score;
    }
    j.push_back({{"level", entry.level}, {"mean_iou", entry.report.mean}, {"per_class", per_class}});
  }
  std::ofstream(options.out_dir / "robustness.json") << j.dump(2) << "\n";
  std::cout << "[pipeline] robustness: " << series.size() << " levels\n";
  return series;
}

void stage_export(const DatasetManifest& manifest, const PipelineOptions& options) {
  require_artifact(semantic_checkpoint_path(options), "fuse");
  require_artifact(color_checkpoint_path(options), "fuse");
  const SparseSemanticTexture store = SparseSemanticTexture::load_checkpoint(semantic_checkpoint_path(options));
  const ColorTexture color = load_color_checkpoint(color_checkpoint_path(options));
  const TexturedMesh mesh = load_dataset_mesh(manifest, options);

  const int res = store.resolution();
  ImageU8 semantic(res, res, kUnlabeled);
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      if (const auto best = fused_argmax(store, x, y)) {
        semantic.at(x, y) = static_cast<std::uint8_t>(best->cls);
      }
    }
  }
  export_textured_mesh(mesh, color.to_image(), semantic, manifest.palette.colors,
                       options.out_dir / "export");
  std::cout << "[pipeline] export -> " << (options.out_dir / "export") << "\n";
}

void run_pipeline(const DatasetManifest& manifest, const std::vector<std::string>& stages,
                  const PipelineOptions& options) {
  const std::vector<std::string> order = {"estimate-normals", "fuse", "propagate",
                                          "evaluate", "robustness", "export"};
  for (const std::string& stage : stages) {
    if (std::find(order.begin(), order.end(), stage) == order.end()) {
      throw std::invalid_argument("pipeline: unknown stage '" + stage + "'");
    }
  }
  for (const std::string& stage : order) {
    if (std::find(stages.begin(), stages.end(), stage) == stages.end()) continue;
    if (stage == "estimate-normals") {
      stage_estimate_normals(manifest, options);
    } else if (stage == "fuse") {
      stage_fuse(manifest, options);
    } else if (stage == "propagate") {
      stage_propagate(manifest, options);
    } else if (stage == "evaluate") {
      stage_evaluate(manifest, options);
    } else if (stage == "robustness") {
      stage_robustness(manifest, options);
    } else if (stage == "export") {
      stage_export(manifest, options);
    }
  }
}

}  // namespace texmesh
